"""Simulation and small-ball / tail analysis of generalized grey Brownian motion.

ggBm with parameters 0 < alpha < 2, 0 < beta <= 1 is realised as
sqrt(L_beta) * B_H with H = alpha / 2, where B_H is fractional Brownian
motion and L_beta is an independent positive variable whose density is the
M-Wright function M_beta.

Modules
-------
specfun
    M-Wright function, Mittag-Leffler function, reciprocal gamma.
pathgen
    fBm and ggBm path sampling with reproducible parallel streams.
norms
    Discretized sup, Hölder and L2 norms.
estimators
    Small-ball, negative-moment, series and tail estimators.
cli
    ``ggbm`` command-line front end.
"""
__version__ = "0.1.0"

from .errors import (
    AccuracyError,
    DomainError,
    EmbeddingError,
    GgbmError,
    InsufficientDataError,
    SeriesOverflowError,
    ValidityError,
)

__all__ = [
    "__version__",
    "GgbmError",
    "DomainError",
    "ValidityError",
    "AccuracyError",
    "SeriesOverflowError",
    "EmbeddingError",
    "InsufficientDataError",
]
