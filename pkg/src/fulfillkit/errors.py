"""Exception hierarchy shared across the package.

Every error raised on purpose derives from FulfillkitError so callers can
catch one type at the boundary. The three concrete classes map onto the CLI
exit codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
"""

from __future__ import annotations


class FulfillkitError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(FulfillkitError):
    """Bad configuration: unknown keys, out-of-range values, missing files."""

    exit_code = 2


class DataError(FulfillkitError):
    """Malformed or inconsistent input data (corpus files, labels, events)."""

    exit_code = 3


class NumericError(FulfillkitError):
    """A numeric routine could not produce a well-defined result."""

    exit_code = 4


class SmogUndefinedError(NumericError):
    """SMOG grade is undefined because the text has no sentences."""
