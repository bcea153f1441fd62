"""Exception hierarchy shared by every gpopt module."""


class GPOptError(Exception):
    """Base class for all gpopt errors."""


class InputError(GPOptError, ValueError):
    """Malformed input: wrong shapes, out-of-box points, negative variances."""


class ConfigError(GPOptError, ValueError):
    """Invalid hyperparameters or experiment configuration."""


class NumericalError(GPOptError, ArithmeticError):
    """A factorization or score computation broke down."""


class UsageError(GPOptError, RuntimeError):
    """An API was called out of its required order."""
