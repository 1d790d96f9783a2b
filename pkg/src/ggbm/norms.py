"""Discretized path norms and their fBm small-ball exponents.

All norm functions accept a single path (1-d) or a stack of paths (2-d,
one per row), sampled on the uniform grid t_i = i/n of [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError

__all__ = [
    "NormKind",
    "Provenance",
    "NormSpec",
    "SUP",
    "L2",
    "holder",
    "parse_norm",
    "sup_norm",
    "holder_norm",
    "l2_norm",
    "theta_for",
]


class NormKind(str, Enum):
    SUP = "sup"
    HOLDER = "holder"
    L2 = "l2"


class Provenance(str, Enum):
    PAPER = "Paper"
    LITERATURE = "Literature"


@dataclass(frozen=True)
class NormSpec:
    kind: NormKind
    gamma: float | None = None

    def __post_init__(self):
        if self.kind is NormKind.HOLDER:
            if self.gamma is None or not 0.0 < self.gamma < 1.0:
                raise DomainError(f"Holder exponent must lie in (0, 1), got {self.gamma}")
        elif self.gamma is not None:
            raise DomainError(f"{self.kind.value} norm takes no exponent")

    @property
    def name(self) -> str:
        if self.kind is NormKind.HOLDER:
            return f"holder:{self.gamma:g}"
        return self.kind.value

    @property
    def theta_provenance(self) -> Provenance:
        return Provenance.PAPER if self.kind is NormKind.SUP else Provenance.LITERATURE

    def theta(self, hurst: float) -> float:
        return theta_for(self, hurst)

    def check_process(self, hurst: float) -> None:
        if self.kind is NormKind.HOLDER and not self.gamma < hurst:
            raise DomainError(
                f"Holder norm needs gamma < H, got gamma={self.gamma}, H={hurst}"
            )

    def __call__(self, paths):
        if self.kind is NormKind.SUP:
            return sup_norm(paths)
        if self.kind is NormKind.L2:
            return l2_norm(paths)
        return holder_norm(paths, self.gamma)


SUP = NormSpec(NormKind.SUP)
L2 = NormSpec(NormKind.L2)


def holder(gamma: float) -> NormSpec:
    return NormSpec(NormKind.HOLDER, float(gamma))


def parse_norm(text: str) -> NormSpec:
    """Parse the CLI names ``sup``, ``l2`` and ``holder:<gamma>``."""
    t = text.strip().lower()
    if t == "sup":
        return SUP
    if t == "l2":
        return L2
    if t.startswith("holder:"):
        try:
            g = float(t.split(":", 1)[1])
        except ValueError:
            raise DomainError(f"bad Holder exponent in {text!r}") from None
        return holder(g)
    raise DomainError(f"unknown norm {text!r}; expected sup, l2 or holder:<gamma>")


def _as_paths(path):
    v = np.asarray(path, dtype=float)
    if v.ndim not in (1, 2):
        raise DomainError("expected a path (1-d) or a stack of paths (2-d)")
    return v


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def sup_norm(path):
    """max_i |v_i|."""
    v = _as_paths(path)
    return _scalar(np.abs(v).max(axis=-1))


def holder_norm(path, gamma: float):
    """Hölder seminorm max_{i<j} |v_j - v_i| / (t_j - t_i)^gamma over all grid pairs.

    Runs over lags rather than pairs: O(n) vector passes of length O(n)
    each, exact over all n(n+1)/2 pairs.
    """
    v = _as_paths(path)
    n = v.shape[-1] - 1
    if n < 1:
        raise DomainError("holder_norm needs at least 2 grid points")
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    best = np.zeros(v.shape[:-1])
    for lag in range(1, n + 1):
        d = np.abs(v[..., lag:] - v[..., :-lag]).max(axis=-1)
        np.maximum(best, d / (lag / n) ** gamma, out=best)
    return _scalar(best)


def l2_norm(path):
    """sqrt of the trapezoid rule for int_0^1 v(t)^2 dt."""
    v = _as_paths(path)
    n = v.shape[-1] - 1
    if n < 1:
        raise DomainError("l2_norm needs at least 2 grid points")
    # scale by the row max so squaring cannot under- or overflow
    scale = np.abs(v).max(axis=-1, keepdims=True)
    scale[scale == 0] = 1.0
    sq = (v / scale) ** 2
    integral = (sq.sum(axis=-1) - 0.5 * (sq[..., 0] + sq[..., -1])) / n
    return _scalar(scale[..., 0] * np.sqrt(integral))


def theta_for(spec: NormSpec, hurst: float) -> float:
    """Small-ball exponent theta of fBm with Hurst index ``hurst`` in this norm.

    sup: 1/H. Hölder(gamma): 1/(H - gamma). L2: 1/H. Only the sup value is
    tagged Paper provenance; see :attr:`NormSpec.theta_provenance`.
    """
    if not 0.0 < hurst < 1.0:
        raise DomainError(f"hurst must lie in (0, 1), got {hurst}")
    if spec.kind is NormKind.HOLDER:
        spec.check_process(hurst)
        return 1.0 / (hurst - spec.gamma)
    return 1.0 / hurst
