"""Learners and target transforms for delivery prediction."""

from .baselines import (
    LinearModel,
    MajorityModel,
    baseline8,
    baseline_feature_matrix,
    linear_fit,
    majority_baseline,
    recommend_duration,
)
from .boxcox import (
    BoxCoxTransform,
    InvertResult,
    boxcox_apply,
    boxcox_fit,
    boxcox_invert,
)
from .enet import (
    ElasticNetModel,
    enet_fit,
    enet_fit_cv,
    enet_kkt_residual,
    enet_predict,
)
from .trees import (
    GbtParams,
    RandomForestModel,
    TreeEnsemble,
    gbt_fit,
    gbt_predict,
    rf_fit,
    rf_oob_importances,
    rf_predict,
)

__all__ = [
    "BoxCoxTransform",
    "ElasticNetModel",
    "GbtParams",
    "InvertResult",
    "LinearModel",
    "MajorityModel",
    "RandomForestModel",
    "TreeEnsemble",
    "baseline8",
    "baseline_feature_matrix",
    "linear_fit",
    "boxcox_apply",
    "boxcox_fit",
    "boxcox_invert",
    "enet_fit",
    "enet_fit_cv",
    "enet_kkt_residual",
    "enet_predict",
    "gbt_fit",
    "gbt_predict",
    "majority_baseline",
    "recommend_duration",
    "rf_fit",
    "rf_oob_importances",
    "rf_predict",
]
