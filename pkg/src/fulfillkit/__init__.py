"""fulfillkit: reward-delivery modeling for crowdfunding projects.

The package covers the full pipeline: corpus handling and synthesis, reward
text embedding and difficulty clustering, time-point feature extraction,
feature selection, delivery classification and duration regression, and a
cross-validated evaluation harness with paired significance tests.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DataError,
    FulfillkitError,
    NumericError,
    SmogUndefinedError,
)

__all__ = [
    "ConfigError",
    "DataError",
    "FulfillkitError",
    "NumericError",
    "SmogUndefinedError",
    "__version__",
]
