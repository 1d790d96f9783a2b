"""Small-ball and tail estimators for norms of fBm and ggBm.

Everything here works on a :class:`NormSampleSet`, the sorted sample of path
norms produced by :func:`norm_samples`. Reductions are fixed-order folds over
the sorted samples, so results do not depend on how the paths were
generated in parallel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, NamedTuple, Union

import numpy as np

from . import pathgen
from .errors import DomainError, InsufficientDataError, ValidityError
from .norms import NormSpec, theta_for
from .specfun import MittagLefflerParams, mittag_leffler, recip_gamma

__all__ = [
    "FBm",
    "Ggbm",
    "MCEstimate",
    "NormSampleSet",
    "MomentTable",
    "Validity",
    "SeriesExpansion",
    "SeriesValue",
    "TailFit",
    "norm_samples",
    "empirical_cdf",
    "small_ball_mc",
    "small_ball_mixed",
    "neg_moments",
    "moment_growth",
    "moment_from_cdf",
    "series_coefficients",
    "small_ball_series",
    "series_remainder_bound",
    "leading_order",
    "tail_mc",
    "tail_target_exponent",
    "tail_exponent_fit",
    "bm_supnorm_cdf_exact",
]

MIN_EVENTS = 100
MIN_NORM = 1e-8
MAX_REL_STDERR = 0.5
DKW_COEF = 1.63


@dataclass(frozen=True)
class FBm:
    hurst: float

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise DomainError(f"hurst must lie in (0, 1), got {self.hurst}")

    def describe(self) -> dict:
        return {"process": "fbm", "hurst": self.hurst}


@dataclass(frozen=True)
class Ggbm:
    alpha: float
    beta: float

    def __post_init__(self):
        pathgen.ProcessParams(self.alpha, self.beta)

    @property
    def hurst(self) -> float:
        return self.alpha / 2.0

    def describe(self) -> dict:
        return {"process": "ggbm", "alpha": self.alpha, "beta": self.beta}


Process = Union[FBm, Ggbm]


@dataclass(frozen=True)
class MCEstimate:
    """A Monte Carlo estimate. ``flags`` holds e.g. ``"unreliable"``."""

    value: float
    stderr: float
    n_samples: int
    seed: int | None = None
    flags: frozenset = frozenset()
    meta: Mapping = field(default_factory=dict)

    @property
    def unreliable(self) -> bool:
        return "unreliable" in self.flags

    def to_record(self) -> dict:
        return {
            "estimate": self.value,
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "flags": sorted(self.flags),
            **{k: v for k, v in self.meta.items()},
        }


@dataclass(frozen=True, eq=False)
class NormSampleSet:
    process: Process | None
    norm: NormSpec | None
    samples: np.ndarray
    seed: int | None = None
    n_steps: int | None = None
    stream_id: int = 0

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if s.size == 0:
            raise InsufficientDataError("empty sample set")
        if not s[0] >= 0:
            raise DomainError("norm samples must be nonnegative")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.size

    @classmethod
    def from_values(cls, values, process: Process | None = None, norm: NormSpec | None = None):
        return cls(process, norm, values)

    def describe(self) -> dict:
        d = dict(self.process.describe()) if self.process is not None else {}
        d.update(
            norm=self.norm.name if self.norm is not None else None,
            theta_provenance=self.norm.theta_provenance.value if self.norm else None,
            n_paths=self.n,
            n_steps=self.n_steps,
            seed=self.seed,
            stream_id=self.stream_id,
        )
        return d


def norm_samples(
    process: Process,
    norm: NormSpec,
    n_paths: int,
    n_steps: int,
    rng: pathgen.RngStream,
    workers: int = 1,
) -> NormSampleSet:
    """Simulate ``n_paths`` paths and return the sorted sample of their norms."""
    norm.check_process(process.hurst)
    beta = process.beta if isinstance(process, Ggbm) else None
    if beta is not None and not beta < 1.0:
        raise DomainError("ggBm norm samples need beta < 1; use FBm for beta = 1")
    blocks = pathgen.map_path_blocks(
        norm, process.hurst, n_steps, n_paths, rng, beta=beta, workers=workers
    )
    return NormSampleSet(
        process, norm, np.concatenate(blocks), rng.seed, n_steps, rng.stream_id
    )


def empirical_cdf(ss: NormSampleSet, x):
    """Right-continuous empirical cdf: fraction of samples <= x."""
    out = np.searchsorted(ss.samples, x, side="right") / ss.n
    return float(out) if np.ndim(out) == 0 else out


def _proportion(count: int, n: int, seed, **meta) -> MCEstimate:
    p = count / n
    flags = frozenset({"unreliable"}) if count < MIN_EVENTS else frozenset()
    return MCEstimate(p, math.sqrt(p * (1.0 - p) / n), n, seed, flags, {"count": int(count), **meta})


def small_ball_mc(ss: NormSampleSet, eps: float) -> MCEstimate:
    """Binomial estimate of P[||X|| <= eps]; flagged unreliable below 100 hits."""
    count = int(np.searchsorted(ss.samples, eps, side="right"))
    return _proportion(count, ss.n, ss.seed)


def small_ball_mixed(
    fbm_set: NormSampleSet,
    beta: float,
    eps: float,
    n_mix: int,
    rng,
    l_values=None,
) -> MCEstimate:
    """Conditional (Rao-Blackwellized) estimate of P[||B_{alpha,beta}|| <= eps].

    Averages F_H(eps / sqrt(L_j)) over ``n_mix`` draws of L_beta, with F_H
    the empirical cdf of ``fbm_set``. ``stderr`` covers the L draws only.
    ``meta`` adds ``stderr_fbm`` (the sampling error inherited from
    ``fbm_set``, by the delta method), ``stderr_total`` combining both, and
    the DKW-type bound ``bias_bound`` = 1.63 / sqrt(len(fbm_set)).

    ``l_values`` replaces the L draws (test hook).
    """
    if fbm_set.process is not None and not isinstance(fbm_set.process, FBm):
        raise DomainError("small_ball_mixed needs an fBm sample set")
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    if l_values is None:
        lam = pathgen.lbeta_sample(beta, rng, size=int(n_mix))
    else:
        lam = np.asarray(l_values, dtype=float).ravel()
    n_mix = lam.size
    with np.errstate(divide="ignore"):
        q = empirical_cdf(fbm_set, eps / np.sqrt(lam))
    q = np.atleast_1d(q)
    value = float(q.mean())
    se_l = float(q.std(ddof=1) / math.sqrt(n_mix)) if n_mix > 1 else 0.0

    # g(X_i) = P_L[L <= eps^2 / X_i^2] on the same L draws
    lam_sorted = np.sort(lam)
    with np.errstate(divide="ignore"):
        g = np.searchsorted(lam_sorted, (eps / fbm_set.samples) ** 2, side="right") / n_mix
    se_x = float(g.std(ddof=1) / math.sqrt(fbm_set.n)) if fbm_set.n > 1 else 0.0
    meta = {
        "stderr_fbm": se_x,
        "stderr_total": math.hypot(se_l, se_x),
        "bias_bound": DKW_COEF / math.sqrt(fbm_set.n),
    }
    seed = getattr(rng, "seed", None)
    return MCEstimate(value, se_l, n_mix, seed, frozenset(), meta)


@dataclass(frozen=True, eq=False)
class MomentTable:
    """Estimates of eta_k = E[||B_H||^-k] for even k, from one sample set.

    Entries share samples, so they are correlated; ``covariance`` is the
    estimated covariance matrix of the means, ordered as ``ks``.
    """

    hurst: float | None
    norm: NormSpec | None
    entries: Mapping[int, MCEstimate]
    covariance: np.ndarray
    excluded_count: int = 0

    @property
    def ks(self) -> list[int]:
        return sorted(self.entries)

    def eta(self, k: int) -> float:
        return self.entries[k].value


def neg_moments(fbm_set: NormSampleSet, k_max: int) -> MomentTable:
    """Sample means of ||B_H||^-k for k = 2, 4, ..., k_max.

    Samples below 1e-8 are dropped (they can only come from corrupt data)
    and counted in ``excluded_count``.
    """
    if k_max < 2 or k_max % 2:
        raise DomainError(f"k_max must be an even integer >= 2, got {k_max}")
    if fbm_set.process is not None and not isinstance(fbm_set.process, FBm):
        raise DomainError("negative moments are defined for fBm sample sets")
    keep = fbm_set.samples[fbm_set.samples >= MIN_NORM]
    excluded = fbm_set.n - keep.size
    if keep.size == 0:
        raise InsufficientDataError("no usable samples for negative moments")
    ks = list(range(2, k_max + 1, 2))
    inv = 1.0 / keep
    powers = np.stack([inv**k for k in ks])
    means = powers.mean(axis=1)
    n = keep.size
    if n > 1:
        cov = np.atleast_2d(np.cov(powers, ddof=1)) / n
    else:
        cov = np.zeros((len(ks), len(ks)))
    seed = fbm_set.seed
    entries = {
        k: MCEstimate(float(means[i]), float(math.sqrt(max(cov[i, i], 0.0))), n, seed,
                      meta={"excluded_count": excluded})
        for i, k in enumerate(ks)
    }
    hurst = fbm_set.process.hurst if fbm_set.process is not None else None
    return MomentTable(hurst, fbm_set.norm, entries, cov, excluded)


def moment_growth(table: MomentTable) -> dict[int, float]:
    """log eta_k / (k log k), which tends to 1/theta as k grows."""
    return {k: math.log(e.value) / (k * math.log(k)) for k, e in table.entries.items()}


def moment_from_cdf(ss: NormSampleSet, k: int) -> float:
    """k * int_0^inf y^(-k-1) F(y) dy with F the empirical cdf of ``ss``.

    F is a step function, so the integral is done exactly interval by
    interval: on [y_i, y_(i+1)) it contributes (i/n)(y_i^-k - y_(i+1)^-k).
    Each difference is formed as -y_i^-k * expm1(k log(y_i / y_(i+1))) to
    avoid cancellation between neighbouring order statistics. Equals the
    sample mean of ||X||^-k up to rounding.
    """
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    y = ss.samples[ss.samples >= MIN_NORM]
    n = y.size
    if n == 0:
        raise InsufficientDataError("no usable samples")
    head = y ** (-float(k))
    diff = np.empty(n)
    diff[:-1] = -head[:-1] * np.expm1(k * np.log(y[:-1] / y[1:]))
    diff[-1] = head[-1]
    weights = np.arange(1, n + 1) / n
    return float(math.fsum(weights * diff))


class Validity(str, Enum):
    SERIES_VALID = "SeriesValid"
    LEADING_ONLY = "LeadingOnly"


@dataclass(frozen=True, eq=False)
class SeriesExpansion:
    """Coefficients c_n of P[||B_{alpha,beta}|| <= eps] = sum_n c_n eps^(2n+2)."""

    beta: float
    coefficients: np.ndarray
    N: int
    validity: Validity
    theta: float | None = None
    covariance: np.ndarray | None = None


def _series_weights(beta: float, N: int) -> np.ndarray:
    w = np.empty(N + 1)
    for n in range(N + 1):
        w[n] = (-1.0) ** n * recip_gamma(1.0 - beta - beta * n) * 2.0 / ((2 * n + 2) * math.factorial(n))
    return w


def series_coefficients(beta: float, moments: MomentTable, N: int) -> SeriesExpansion:
    """c_n = 2 (-1)^n eta_{2n+2} / ((2n+2) n! Gamma(1 - beta - beta n)), n = 0..N.

    The expansion is marked ``SeriesValid`` iff 2/theta + beta < 1 for the
    norm and Hurst index of ``moments`` (alpha + beta < 1 for the sup norm);
    otherwise ``LeadingOnly``.

    Raises
    ------
    InsufficientDataError
        If eta_{2N+2} has a relative standard error above 50 %.
    """
    if N < 0:
        raise DomainError("N must be nonnegative")
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    ks = [2 * n + 2 for n in range(N + 1)]
    missing = [k for k in ks if k not in moments.entries]
    if missing:
        raise DomainError(f"moment table lacks eta_k for k = {missing}")
    top = moments.entries[ks[-1]]
    if top.stderr > MAX_REL_STDERR * abs(top.value):
        raise InsufficientDataError(
            f"eta_{ks[-1]} has relative stderr {top.stderr / top.value:.2f} > {MAX_REL_STDERR}; "
            f"lower N"
        )
    theta = None
    validity = Validity.LEADING_ONLY
    if moments.norm is not None and moments.hurst is not None:
        theta = theta_for(moments.norm, moments.hurst)
        if 2.0 / theta + beta < 1.0:
            validity = Validity.SERIES_VALID
    coeffs = np.empty(N + 1)
    for n, k in enumerate(ks):
        # kept in this order so that N = 0 reproduces leading_order bit for bit
        rg = recip_gamma(1.0 - beta - beta * n)
        coeffs[n] = (-1.0) ** n * (moments.eta(k) * rg) * 2.0 / ((2 * n + 2) * math.factorial(n))
    idx = [moments.ks.index(k) for k in ks]
    w = _series_weights(beta, N)
    cov = moments.covariance[np.ix_(idx, idx)] * np.outer(w, w)
    return SeriesExpansion(float(beta), coeffs, N, validity, theta, cov)


class SeriesValue(NamedTuple):
    value: float
    terms_used: int
    remainder_flag: bool
    stderr: float


def small_ball_series(
    exp: SeriesExpansion, eps: float, tol: float = 1e-12, force: bool = False
) -> SeriesValue:
    """Evaluate sum_n c_n eps^(2n+2).

    Stops once two consecutive terms fall below ``tol`` times the partial
    sum; ``remainder_flag`` is set when the order N ran out first. ``stderr``
    propagates the moment covariance. ``force`` allows LeadingOnly
    expansions (exploratory output).
    """
    if exp.validity is not Validity.SERIES_VALID and not force:
        raise ValidityError(
            "series expansion is not valid here (2/theta + beta >= 1); pass force=True "
            "for exploratory output"
        )
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    if eps == 0:
        return SeriesValue(0.0, 1, False, 0.0)
    total = 0.0
    small_run = 0
    used = 0
    powers = []
    for n, c in enumerate(exp.coefficients):
        term = c * eps ** (2 * n + 2)
        total += term
        powers.append(eps ** (2 * n + 2))
        used = n + 1
        small_run = small_run + 1 if abs(term) < tol * abs(total) else 0
        if small_run >= 2:
            break
    flag = small_run < 2
    se = 0.0
    if exp.covariance is not None:
        v = np.array(powers)
        se = float(math.sqrt(max(v @ exp.covariance[:used, :used] @ v, 0.0)))
    return SeriesValue(float(total), used, flag, se)


def series_remainder_bound(exp: SeriesExpansion, y: float, beta_hat: float | None = None) -> float:
    """y^-2 E_{u,u}(y^-2) - sum_{n=1}^N y^(-2n) / Gamma(u n), u = 1 - beta_hat.

    Up to a constant, this bounds the tail of the series beyond order N at
    radius y. ``beta_hat`` defaults to the midpoint of (beta, 1 - 2/theta).
    """
    if y <= 0:
        raise DomainError("y must be positive")
    if beta_hat is None:
        if exp.theta is None:
            raise DomainError("beta_hat needed when theta is unknown")
        beta_hat = 0.5 * (exp.beta + 1.0 - 2.0 / exp.theta)
    u = 1.0 - beta_hat
    if not 0.0 < u:
        raise DomainError(f"beta_hat must be < 1, got {beta_hat}")
    z = y**-2.0
    full = z * mittag_leffler(MittagLefflerParams(u, u), z)
    head = sum(z**n * recip_gamma(u * n) for n in range(1, exp.N + 1))
    return float(full - head)


def leading_order(eta2: MCEstimate, beta: float, eps: float) -> MCEstimate:
    """eta_2 eps^2 / Gamma(1 - beta), the small-eps asymptote."""
    if eps < 0:
        raise DomainError("eps must be nonnegative")
    rg = recip_gamma(1.0 - beta)
    value = (eta2.value * rg) * eps**2
    return MCEstimate(value, eta2.stderr * rg * eps**2, eta2.n_samples, eta2.seed)


def tail_mc(ss: NormSampleSet, y: float) -> MCEstimate:
    """Binomial estimate of P[||X|| >= y]; flagged unreliable below 100 exceedances."""
    count = ss.n - int(np.searchsorted(ss.samples, y, side="left"))
    return _proportion(count, ss.n, ss.seed)


@dataclass(frozen=True)
class TailFit:
    beta: float
    fitted_exponent: float
    target_exponent: float
    intercept: float
    y_grid: tuple
    log_neg_log_p: tuple
    r_squared: float

    def to_record(self) -> dict:
        return {
            "beta": self.beta,
            "fitted_exponent": self.fitted_exponent,
            "target_exponent": self.target_exponent,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_points": len(self.y_grid),
        }


def tail_target_exponent(beta: float) -> float:
    return 2.0 / (2.0 - beta)


def tail_exponent_fit(
    ss: NormSampleSet,
    beta: float,
    p_lo: float = 1e-4,
    p_hi: float = 1e-1,
    n_grid: int = 40,
    min_samples: int = 100_000,
) -> TailFit:
    """Regress log(-log p(y)) on log y over the window p_lo <= p(y) <= p_hi.

    The slope estimates the tail exponent, to be compared with
    2 / (2 - beta) (2 for fBm, beta = 1).
    """
    if not 0.0 < p_lo < p_hi < 1.0:
        raise DomainError(f"need 0 < p_lo < p_hi < 1, got {p_lo}, {p_hi}")
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    if ss.n < min_samples:
        raise InsufficientDataError(f"tail fit needs >= {min_samples} samples, got {ss.n}")
    s = ss.samples
    n = ss.n
    i_lo = n - int(math.ceil(p_hi * n))
    i_hi = n - int(math.ceil(p_lo * n))
    y_lo, y_hi = s[max(i_lo, 0)], s[min(i_hi, n - 1)]
    if not 0 < y_lo < y_hi:
        raise InsufficientDataError("tail window is empty")
    grid = np.geomspace(y_lo, y_hi, n_grid)
    counts = n - np.searchsorted(s, grid, side="left")
    p = counts / n
    ok = (p >= p_lo) & (p <= p_hi) & (p > 0) & (p < 1)
    grid, p = grid[ok], p[ok]
    grid, first = np.unique(grid, return_index=True)
    p = p[first]
    if grid.size < 5:
        raise InsufficientDataError(f"only {grid.size} usable tail grid points (need 5)")
    x = np.log(grid)
    z = np.log(-np.log(p))
    slope, intercept = np.polyfit(x, z, 1)
    resid = z - (slope * x + intercept)
    sst = float(((z - z.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / sst if sst > 0 else 0.0
    return TailFit(
        float(beta),
        float(slope),
        tail_target_exponent(beta),
        float(intercept),
        tuple(grid.tolist()),
        tuple(z.tolist()),
        r2,
    )


def bm_supnorm_cdf_exact(eps: float, n_terms: int | None = None, return_bound: bool = False):
    """P[sup_{[0,1]} |W| <= eps] for standard Brownian motion W.

    Classical theta series
    (4/pi) sum_j (-1)^j / (2j+1) exp(-(2j+1)^2 pi^2 / (8 eps^2)),
    truncated after ``n_terms`` terms (default: enough for double precision).
    With ``return_bound`` also returns the alternating-series remainder bound
    (magnitude of the first omitted term).
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    if n_terms is None:
        n_terms = int(math.ceil(3.0 * eps)) + 8
    if n_terms < 1:
        raise DomainError("n_terms must be positive")
    j = np.arange(n_terms + 1, dtype=float)
    odd = 2.0 * j + 1.0
    terms = (4.0 / math.pi) * np.exp(-(odd**2) * math.pi**2 / (8.0 * eps**2)) / odd
    terms[1::2] *= -1.0
    value = float(min(max(terms[:n_terms].sum(), 0.0), 1.0))
    if return_bound:
        return value, float(abs(terms[n_terms]))
    return value
