"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems (ValueError /
ConfigError) exit 1, malformed data files (FormatError) exit 2, and
numerical failures (NumericalError) exit 3.
"""


class SGCapError(Exception):
    """Base class for package-specific errors."""


class ConfigError(SGCapError, ValueError):
    """Invalid configuration value (bad flag, bad hyperparameter)."""


class FormatError(SGCapError):
    """Malformed or truncated data file (bank, frames, checkpoint, corpus)."""


class NumericalError(SGCapError):
    """Numerical failure, e.g. divergence to NaN/inf during training."""
