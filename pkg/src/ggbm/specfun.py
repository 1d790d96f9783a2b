"""Special functions: reciprocal gamma, the M-Wright function, Mittag-Leffler.

The M-Wright function

    M_beta(x) = sum_{n>=0} (-x)^n / (n! Gamma(1 - beta - beta n)),  x >= 0,

is the density of the subordinator L_beta used to build ggBm paths. The
series is entire but alternating, so in double precision it is only usable
up to a beta-dependent crossover point. Beyond it we evaluate the density
through the Kanter integral for the one-sided stable law (positive
integrand, no cancellation); the calibrated leading-order asymptotic is kept
as an alternative tail for diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, DomainError, SeriesOverflowError

__all__ = [
    "MWrightEval",
    "MittagLefflerParams",
    "log_gamma",
    "recip_gamma",
    "mwright",
    "mwright_asymptotic",
    "mwright_log_asymptotic",
    "mittag_leffler",
    "mwright_moment",
    "default_crossover",
]

N_MAX = 400
SERIES_TOL = 1e-14
# Largest tolerated ratio eps_machine * sum|terms| / |sum| at the crossover.
CANCELLATION_TOL = 1e-12
MLF_OVERFLOW_LOG = math.log(1e300)
_EPS = np.finfo(float).eps


def log_gamma(x):
    """ln Gamma(x) for x > 0 (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    out = special.gammaln(xa)
    return float(out) if out.ndim == 0 else out


def _recip_gamma_logparts(x):
    """Return (sign, log|1/Gamma(x)|) with sign 0 at the poles of Gamma.

    Nonpositive arguments go through the reflection rewrite
    1/Gamma(x) = sin(pi (1 - x)) Gamma(1 - x) / pi, so no pole is evaluated.
    """
    x = np.asarray(x, dtype=float)
    sign = np.ones_like(x)
    logmag = np.empty_like(x)

    pos = x > 0
    logmag[pos] = -special.gammaln(x[pos])

    neg = ~pos
    xn = x[neg]
    # fmod is exact, so sin(pi * r) keeps full precision for large |x|
    r = np.fmod(1.0 - xn, 2.0)
    s = np.sin(np.pi * r)
    # arguments within a few ulps of a pole are treated as the pole: they
    # arise as 1 - beta - beta*n when beta*(n+1) is an integer in exact
    # arithmetic but not in floating point (e.g. beta = 0.3, n = 9)
    pole = np.abs(xn - np.round(xn)) <= 4.0 * np.spacing(np.abs(xn) + 1.0)
    s[pole] = 0.0
    with np.errstate(divide="ignore"):
        logmag[neg] = np.log(np.abs(s)) - math.log(math.pi) + special.gammaln(1.0 - xn)
    sign[neg] = np.sign(s)
    logmag[neg & (sign == 0)] = -np.inf
    return sign, logmag


def recip_gamma(x):
    """1/Gamma(x) for any real x; exact 0.0 at x = 0, -1, -2, ...

    Examples
    --------
    >>> recip_gamma(1.0)
    1.0
    >>> recip_gamma(-2.0)
    0.0
    """
    xa = np.asarray(x, dtype=float)
    flat = xa.reshape(-1)
    out = np.empty_like(flat)
    # direct evaluation is more accurate where Gamma does not overflow
    direct = (flat > 0) & (flat < 170.0)
    out[direct] = 1.0 / special.gamma(flat[direct])
    rest = ~direct
    if np.any(rest):
        sign, logmag = _recip_gamma_logparts(flat[rest])
        with np.errstate(over="ignore"):
            out[rest] = np.where(sign == 0, 0.0, sign * np.exp(logmag))
    out = out.reshape(xa.shape)
    return float(out) if out.ndim == 0 else out


def mwright_log_asymptotic(beta, x):
    """Leading exponent -((1-beta)/beta) (beta x)^(1/(1-beta)) of M_beta at infinity."""
    _check_beta(beta)
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("mwright_log_asymptotic requires x > 0")
    out = -((1.0 - beta) / beta) * (beta * xa) ** (1.0 / (1.0 - beta))
    return float(out) if out.ndim == 0 else out


def _check_beta(beta):
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta!r}")


@lru_cache(maxsize=256)
def _series_coefficients(beta: float, n_max: int):
    """Signs and log-magnitudes of (-1)^n / (n! Gamma(1 - beta - beta n))."""
    n = np.arange(n_max, dtype=float)
    sign, logmag = _recip_gamma_logparts(1.0 - beta - beta * n)
    sign = sign * np.where(n % 2 == 0, 1.0, -1.0)
    logmag = logmag - special.gammaln(n + 1.0)
    sign.setflags(write=False)
    logmag.setflags(write=False)
    return sign, logmag


def _stop_index(terms, partial, tol):
    """First index at which 3 consecutive terms sit below tol * |partial|, or -1."""
    small = np.abs(terms) < tol * np.abs(partial)
    run = small[:-2] & small[1:-1] & small[2:]
    hit = run.any(axis=0)
    idx = np.where(hit, run.argmax(axis=0) + 2, -1)
    return idx


def _series_eval(beta, x, tol=SERIES_TOL, n_max=N_MAX):
    """Sum the M-Wright series at x > 0 (1-d array).

    Returns (values, stop_index, cancellation) where cancellation is
    eps * sum|t_n| / |sum|, an estimate of the relative rounding error.
    """
    sign, logc = _series_coefficients(float(beta), int(n_max))
    logx = np.log(x)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        logt = logc[:, None] + np.arange(n_max)[:, None] * logx[None, :]
        terms = np.where(sign[:, None] == 0, 0.0, sign[:, None] * np.exp(logt))
        partial = np.cumsum(terms, axis=0)
        stop = _stop_index(terms, partial, tol)
        cols = np.arange(x.size)
        values = partial[np.maximum(stop, 0), cols]
        csum = np.cumsum(np.abs(terms), axis=0)[np.maximum(stop, 0), cols]
        cancel = _EPS * csum / np.abs(values)
    cancel = np.where(np.isfinite(cancel), cancel, np.inf)
    return values, stop, cancel


def _series_ok(beta, x):
    v, stop, cancel = _series_eval(beta, np.array([x]))
    return bool(stop[0] >= 0 and v[0] > 0 and cancel[0] <= CANCELLATION_TOL)


@lru_cache(maxsize=256)
def default_crossover(beta: float) -> float:
    """Largest x at which the series is both convergent and precise, by bisection."""
    _check_beta(beta)
    lo, hi = 0.0, 64.0
    if _series_ok(beta, hi):
        return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _series_ok(beta, mid):
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise AccuracyError(f"M-Wright series unusable at any x > 0 for beta={beta}")
    return lo


def _kanter_logk(beta, phi):
    """log of Kanter's function K(phi) for phi in (0, pi)."""
    b = beta
    with np.errstate(divide="ignore"):
        return (
            b * np.log(np.sin(b * phi))
            + (1.0 - b) * np.log(np.sin((1.0 - b) * phi))
            - np.log(np.sin(phi))
        ) / (1.0 - b)


def _kanter_k0(beta):
    return beta ** (beta / (1.0 - beta)) * (1.0 - beta)


def _mwright_integral(beta, x):
    """M_beta(x) for x > 0 through the one-sided stable (Kanter) integral.

    M_beta(x) = x^(b/(1-b)) / (pi (1-b)) * int_0^pi K e^{-K x^(1/(1-b))} dphi;
    the leading exp(-K(0) x^(1/(1-b))) factor is pulled out analytically.
    """
    p = 1.0 / (1.0 - beta)
    xp = x**p
    k0 = _kanter_k0(beta)
    log_front = (beta * p) * math.log(x) - math.log(math.pi * (1.0 - beta)) - k0 * xp
    if log_front < -760.0:
        return 0.0

    def integrand(phi):
        logk = float(_kanter_logk(beta, phi))
        # K blows up at phi -> pi, where the integrand vanishes
        if not logk < 700.0:
            return 0.0
        k = math.exp(logk)
        return k * math.exp(-(k - k0) * xp)

    width = min(math.pi / 2, 20.0 / math.sqrt(xp))
    a, _ = integrate.quad(integrand, 0.0, width, epsabs=0.0, epsrel=1e-13, limit=200)
    b, _ = integrate.quad(integrand, width, math.pi, epsabs=0.0, epsrel=1e-13, limit=200)
    return math.exp(log_front) * (a + b)


@dataclass(frozen=True)
class MWrightEval:
    """Evaluation policy for M_beta.

    Use :meth:`for_beta` to get the calibrated default crossover. ``tail``
    selects the evaluator past the crossover: ``"integral"`` (exact) or
    ``"asymptotic"`` (leading order times a power-law prefactor whose scale is
    matched to the series at the crossover).
    """

    beta: float
    crossover_x: float
    series_tol: float = SERIES_TOL
    tail: Literal["integral", "asymptotic"] = "integral"
    asymptotic_scale: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        _check_beta(self.beta)
        if not self.crossover_x > 0:
            raise DomainError("crossover_x must be positive")
        if not self.series_tol > 0:
            raise DomainError("series_tol must be positive")
        if self.tail not in ("integral", "asymptotic"):
            raise DomainError(f"unknown tail method {self.tail!r}")
        if math.isnan(self.asymptotic_scale):
            object.__setattr__(self, "asymptotic_scale", _calibrate_scale(self))

    @classmethod
    def for_beta(cls, beta: float, tail: str = "integral") -> "MWrightEval":
        return _default_eval(float(beta), tail)


@lru_cache(maxsize=256)
def _default_eval(beta, tail):
    return MWrightEval(beta, default_crossover(beta), tail=tail)


def _asym_shape(beta, x):
    """(beta x)^((beta - 1/2)/(1 - beta)) * exp(leading exponent)."""
    bx = beta * np.asarray(x, dtype=float)
    expo = (beta - 0.5) / (1.0 - beta)
    return bx**expo * np.exp(-((1.0 - beta) / beta) * bx ** (1.0 / (1.0 - beta)))


def _calibrate_scale(ev: MWrightEval) -> float:
    xc = ev.crossover_x
    v, stop, _ = _series_eval(ev.beta, np.array([xc]), ev.series_tol)
    if stop[0] < 0:
        raise AccuracyError(
            f"series does not converge at crossover_x={xc} for beta={ev.beta}"
        )
    return float(v[0] / _asym_shape(ev.beta, xc))


def _as_eval(ev) -> MWrightEval:
    if isinstance(ev, MWrightEval):
        return ev
    return MWrightEval.for_beta(float(ev))


def mwright(ev, x):
    """M-Wright function M_beta(x) for x >= 0.

    Parameters
    ----------
    ev : MWrightEval or float
        Evaluation policy, or just beta (default policy).
    x : float or array_like
        Nonnegative arguments.

    Returns
    -------
    float or ndarray
        Values clamped to be nonnegative.

    Raises
    ------
    AccuracyError
        If the series stopping rule fails below the crossover, which means
        ``crossover_x`` was set too large for this beta.
    """
    ev = _as_eval(ev)
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa >= 0)):
        raise DomainError("mwright requires x >= 0")
    flat = xa.reshape(-1)
    out = np.zeros_like(flat)

    zero = flat == 0
    out[zero] = recip_gamma(1.0 - ev.beta)

    ser = (~zero) & (flat <= ev.crossover_x)
    if np.any(ser):
        v, stop, _ = _series_eval(ev.beta, flat[ser], ev.series_tol)
        if np.any(stop < 0):
            bad = flat[ser][stop < 0][0]
            raise AccuracyError(
                f"M-Wright series did not converge within {N_MAX} terms at x={bad} "
                f"(beta={ev.beta}); crossover_x={ev.crossover_x} is too large"
            )
        out[ser] = v

    big = flat > ev.crossover_x
    if np.any(big):
        if ev.tail == "integral":
            out[big] = [_mwright_integral(ev.beta, xi) for xi in flat[big]]
        else:
            out[big] = ev.asymptotic_scale * _asym_shape(ev.beta, flat[big])

    out = np.maximum(out, 0.0).reshape(xa.shape)
    return float(out) if out.ndim == 0 else out


def mwright_asymptotic(ev, x):
    """Calibrated large-x asymptotic prefactor * exp(leading exponent)."""
    ev = _as_eval(ev)
    out = ev.asymptotic_scale * _asym_shape(ev.beta, x)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class MittagLefflerParams:
    u: float
    v: float

    def __post_init__(self):
        if not (self.u > 0 and self.v > 0):
            raise DomainError(f"Mittag-Leffler needs u, v > 0, got {self.u}, {self.v}")


def _mlf_nmax(u, az):
    # crude Stirling: the terms peak near n ~ |z|^(1/u) / u
    if az == 0:
        return N_MAX
    peak = az ** (1.0 / u) / u
    return int(min(max(N_MAX, 3 * peak + 100), 200_000))


def mittag_leffler(p: MittagLefflerParams, z: float, tol: float = SERIES_TOL) -> float:
    """Two-parameter Mittag-Leffler function E_{u,v}(z) for real z.

    Raises
    ------
    SeriesOverflowError
        If exp(|z|^(1/u)) would exceed 1e300.
    AccuracyError
        If the stopping rule fails or cancellation destroys the result.
    """
    z = float(z)
    az = abs(z)
    if az > 0 and math.log(az) / p.u > math.log(MLF_OVERFLOW_LOG):
        raise SeriesOverflowError(f"E_{{{p.u},{p.v}}}({z}) exceeds the overflow guard")
    if z == 0:
        return recip_gamma(p.v)
    n_max = _mlf_nmax(p.u, az)
    n = np.arange(n_max, dtype=float)
    logt = n * math.log(az) - special.gammaln(p.u * n + p.v)
    terms = np.exp(logt)
    if z < 0:
        terms[1::2] *= -1.0
    partial = np.cumsum(terms)
    stop = int(_stop_index(terms[:, None], partial[:, None], tol)[0])
    if stop < 0:
        raise AccuracyError(f"Mittag-Leffler series failed to converge at z={z}")
    value = float(partial[stop])
    if not math.isfinite(value):
        raise SeriesOverflowError(f"E_{{{p.u},{p.v}}}({z}) overflows")
    if value == 0 or _EPS * np.abs(terms[: stop + 1]).sum() > 1e-8 * abs(value):
        raise AccuracyError(f"cancellation in Mittag-Leffler series at z={z}")
    return value


def mwright_moment(beta: float, n: int) -> float:
    """E[L_beta^n] = n! / Gamma(1 + beta n)."""
    if n < 0 or int(n) != n:
        raise DomainError("moment order must be a nonnegative integer")
    return math.exp(math.lgamma(n + 1.0) - math.lgamma(1.0 + beta * n))
