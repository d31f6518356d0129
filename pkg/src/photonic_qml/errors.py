"""Exception hierarchy shared by every module.

The CLI maps the three top-level families onto distinct exit codes.
"""


class PhotonicError(Exception):
    """Base class for all package errors."""


class ConfigError(PhotonicError, ValueError):
    """Invalid settings, arguments or preconditions supplied by the caller."""


class DataError(PhotonicError, ValueError):
    """Malformed or out-of-domain input data."""


class NumericalError(PhotonicError, ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class NotPositiveDefiniteError(NumericalError):
    """``K + alpha*I`` is not positive definite; raise the ridge weight."""


class RankDeficientError(NumericalError):
    """A design matrix does not have full column rank."""
