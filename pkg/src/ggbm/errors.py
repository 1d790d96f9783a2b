"""Exception hierarchy shared by all ggbm modules.

The CLI maps these onto exit codes: domain and validity problems exit with
2, numerical failures with 3, insufficient data with 4.
"""


class GgbmError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class DomainError(GgbmError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 2


class ValidityError(GgbmError, ValueError):
    """A series expansion was requested outside its region of validity."""

    exit_code = 2


class AccuracyError(GgbmError, ArithmeticError):
    """A series did not meet its stopping rule, or lost too much precision."""

    exit_code = 3


class SeriesOverflowError(GgbmError, OverflowError):
    exit_code = 3


class EmbeddingError(GgbmError, ArithmeticError):
    """Neither circulant embedding nor the dense fallback produced a sampler."""

    exit_code = 3


class InsufficientDataError(GgbmError):
    """Too few samples (or usable grid points) for a reliable estimate."""

    exit_code = 4
