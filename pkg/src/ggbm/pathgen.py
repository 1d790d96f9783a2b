"""Sampling of fBm, the subordinator L_beta, and ggBm paths on [0, 1].

ggBm is simulated through its subordination representation
B_{alpha,beta}(t) = sqrt(L_beta) * B_{alpha/2}(t), with one L per path drawn
independently of the Gaussian factor.

Paths are produced in fixed-size blocks. Block ``b`` of a request draws its
randomness from ``SeedSequence(seed, spawn_key=(stream_id, b, ...))``, so the
output depends only on (seed, stream_id, parameters) and never on how many
workers generated it.
"""
from __future__ import annotations

import io
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import linalg

from .errors import DomainError, EmbeddingError

__all__ = [
    "ProcessParams",
    "RngStream",
    "PathGrid",
    "fbm_sample",
    "ggbm_sample",
    "stable_oneside_sample",
    "lbeta_sample",
    "map_path_blocks",
]

NEG_EIG_RTOL = 1e-10
# Upper bound on (paths per block) * (embedding length), about 32 MB of complex128.
_BLOCK_BUDGET = 2**21

_GAUSS, _SUBORD = 0, 1


@dataclass(frozen=True)
class ProcessParams:
    """ggBm parameters; ``hurst`` is alpha/2."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise DomainError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not 0.0 < self.beta <= 1.0:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")

    @property
    def hurst(self) -> float:
        return self.alpha / 2.0


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by (seed, stream_id)."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.stream_id < 0:
            raise DomainError("stream_id must be nonnegative")
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)

    def generator(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *key))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


@dataclass(frozen=True, eq=False)
class PathGrid:
    """Sampled paths on the grid t_i = i / n_steps, i = 0..n_steps.

    ``values`` has one row per path and n_steps + 1 columns. It is made
    read-only on construction.
    """

    n_steps: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] != self.n_steps + 1:
            raise DomainError(
                f"values must be (n_paths >= 1, {self.n_steps + 1}), got {v.shape}"
            )
        v = np.array(v, copy=True) if v.flags.writeable else v
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) / self.n_steps

    def to_csv(self) -> str:
        header = ",".join(f"t_{i}" for i in range(self.n_steps + 1))
        lines = [header]
        for row in self.values.tolist():
            lines.append(",".join(repr(x) for x in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "PathGrid":
        buf = io.StringIO(text)
        header = buf.readline().strip().split(",")
        values = np.loadtxt(buf, delimiter=",", ndmin=2)
        return cls(len(header) - 1, values)

    _MAGIC = b"GGBM"
    _VERSION = 1
    _HEAD = struct.Struct("<4sBII")

    def to_bytes(self) -> bytes:
        head = self._HEAD.pack(self._MAGIC, self._VERSION, self.n_steps, self.n_paths)
        return head + self.values.astype("<f8").tobytes(order="C")

    @classmethod
    def from_bytes(cls, data: bytes) -> "PathGrid":
        magic, version, n_steps, n_paths = cls._HEAD.unpack_from(data)
        if magic != cls._MAGIC:
            raise ValueError("not a GGBM path file")
        if version != cls._VERSION:
            raise ValueError(f"unsupported GGBM version {version}")
        body = np.frombuffer(data, dtype="<f8", offset=cls._HEAD.size)
        if body.size != n_paths * (n_steps + 1):
            raise ValueError("truncated GGBM path file")
        return cls(n_steps, body.reshape(n_paths, n_steps + 1).astype(float))


# ---------------------------------------------------------------------------
# fractional Gaussian noise
# ---------------------------------------------------------------------------


def _fgn_autocov(hurst: float, n: int) -> np.ndarray:
    """Autocovariance of unit-step fGn at lags 0..n."""
    k = np.arange(n + 1, dtype=float)
    h2 = 2.0 * hurst
    return 0.5 * ((k + 1) ** h2 - 2 * k**h2 + np.abs(k - 1) ** h2)


class _FgnSampler:
    """Exact sampler for m consecutive unit-step fGn values."""

    def __init__(self, hurst: float, m: int, method: str):
        self.hurst = hurst
        self.m = m
        self.sqrt_eigs = None
        self.chol = None
        if method in ("auto", "circulant"):
            self.sqrt_eigs = self._circulant(hurst, m)
            if self.sqrt_eigs is None and method == "circulant":
                raise EmbeddingError(f"circulant embedding not PSD for H={hurst}, m={m}")
        if self.sqrt_eigs is None:
            self.chol = self._cholesky(hurst, m)

    @staticmethod
    def _circulant(hurst, m):
        r = _fgn_autocov(hurst, m)
        row = np.concatenate([r, r[-2:0:-1]])
        eigs = np.fft.fft(row).real
        if eigs.min() < -NEG_EIG_RTOL * eigs.max():
            return None
        eigs = np.clip(eigs, 0.0, None)
        return np.sqrt(eigs / row.size)

    @staticmethod
    def _cholesky(hurst, m):
        cov = linalg.toeplitz(_fgn_autocov(hurst, m - 1))
        try:
            return linalg.cholesky(cov, lower=True)
        except linalg.LinAlgError as exc:
            raise EmbeddingError(
                f"fGn covariance not positive definite for H={hurst}, m={m}"
            ) from exc

    def draw(self, gen: np.random.Generator, rows: int) -> np.ndarray:
        m = self.m
        if self.sqrt_eigs is not None:
            # real and imaginary parts of one complex draw are independent samples
            pairs = (rows + 1) // 2
            size = self.sqrt_eigs.size
            z = gen.standard_normal((pairs, 2 * size)).view(np.complex128)
            w = np.fft.fft(z * self.sqrt_eigs, axis=1)
            out = np.empty((2 * pairs, m))
            out[0::2] = w.real[:, :m]
            out[1::2] = w.imag[:, :m]
            return out[:rows]
        z = gen.standard_normal((rows, m))
        return z @ self.chol.T


@lru_cache(maxsize=32)
def _sampler(hurst: float, m: int, method: str) -> _FgnSampler:
    return _FgnSampler(hurst, m, method)


def _padded_length(n_steps: int) -> int:
    return 1 << max(0, (n_steps - 1).bit_length())


def _block_rows(n_steps: int) -> int:
    rows = _BLOCK_BUDGET // (2 * _padded_length(n_steps))
    return max(2, rows - rows % 2)


def _check_grid(n_steps: int, n_paths: int):
    if n_steps < 1 or int(n_steps) != n_steps:
        raise DomainError("n_steps must be a positive integer")
    if n_paths < 1 or int(n_paths) != n_paths:
        raise DomainError("n_paths must be a positive integer")


def _fbm_rows(sampler: _FgnSampler, gen, rows: int, n_steps: int, hurst: float):
    fgn = sampler.draw(gen, rows)[:, :n_steps]
    paths = np.zeros((rows, n_steps + 1))
    np.cumsum(fgn, axis=1, out=paths[:, 1:])
    paths *= float(n_steps) ** (-hurst)
    return paths


def map_path_blocks(
    fn: Callable[[np.ndarray], np.ndarray],
    hurst: float,
    n_steps: int,
    n_paths: int,
    rng: RngStream,
    beta: float | None = None,
    workers: int = 1,
    method: Literal["auto", "circulant", "cholesky"] = "auto",
) -> list:
    """Generate paths block by block and apply ``fn`` to each block.

    With ``beta`` set, rows are ggBm paths sqrt(L) * fBm; otherwise fBm.
    Results come back in block order, whatever the worker count. Only one
    block per worker is alive at a time, so 10^6 paths never sit in memory.
    """
    _check_grid(n_steps, n_paths)
    if not 0.0 < hurst < 1.0:
        raise DomainError(f"hurst must lie in (0, 1), got {hurst}")
    sampler = _sampler(float(hurst), _padded_length(n_steps), method)
    per_block = _block_rows(n_steps)
    plan = [
        (b, min(per_block, n_paths - start))
        for b, start in enumerate(range(0, n_paths, per_block))
    ]

    def run(item):
        b, rows = item
        paths = _fbm_rows(sampler, rng.generator(b, _GAUSS), rows, n_steps, hurst)
        if beta is not None:
            lam = lbeta_sample(beta, rng.generator(b, _SUBORD), size=rows)
            paths *= np.sqrt(lam)[:, None]
        return fn(paths)

    if workers <= 1 or len(plan) == 1:
        return [run(item) for item in plan]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, plan))


def fbm_sample(
    hurst: float,
    n_steps: int,
    n_paths: int,
    rng: RngStream,
    workers: int = 1,
    method: Literal["auto", "circulant", "cholesky"] = "auto",
) -> PathGrid:
    """Exact-in-law fBm paths by circulant embedding of fractional Gaussian noise.

    Non-power-of-two ``n_steps`` are padded internally and truncated; the
    covariance on the returned grid is exact either way. ``method`` forces
    the generator ("cholesky" is the dense fallback used when the embedding
    has materially negative eigenvalues).
    """
    blocks = map_path_blocks(
        lambda p: p, hurst, n_steps, n_paths, rng, workers=workers, method=method
    )
    return PathGrid(n_steps, np.concatenate(blocks))


def ggbm_sample(
    params: ProcessParams,
    n_steps: int,
    n_paths: int,
    rng: RngStream,
    workers: int = 1,
) -> PathGrid:
    """ggBm paths sqrt(L_beta) * B_H(t), H = alpha/2, one L per path.

    The Gaussian factor is the one :func:`fbm_sample` returns for the same
    stream, so ``ggbm_sample`` rows are exact rescalings of those rows.
    """
    if not params.beta < 1.0:
        raise DomainError("ggbm_sample needs beta < 1; use fbm_sample for beta = 1")
    blocks = map_path_blocks(
        lambda p: p, params.hurst, n_steps, n_paths, rng, beta=params.beta, workers=workers
    )
    return PathGrid(n_steps, np.concatenate(blocks))


# ---------------------------------------------------------------------------
# one-sided stable law and L_beta
# ---------------------------------------------------------------------------


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def _log_stable(beta: float, gen: np.random.Generator, size):
    # Kanter: S = (K(phi) / E)^((1-beta)/beta), phi ~ U(0, pi], E ~ Exp(1)
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    phi = np.pi * (1.0 - gen.random(size))
    e = gen.standard_exponential(size)
    with np.errstate(divide="ignore"):
        log_k = (
            beta * np.log(np.sin(beta * phi))
            + (1.0 - beta) * np.log(np.sin((1.0 - beta) * phi))
            - np.log(np.sin(phi))
        ) / (1.0 - beta)
        return (1.0 - beta) / beta * (log_k - np.log(e))


def stable_oneside_sample(beta: float, rng, size: int | Sequence[int] | None = None):
    """Positive beta-stable draws with E[exp(-s S)] = exp(-s^beta)."""
    gen = _as_generator(rng)
    with np.errstate(over="ignore"):
        out = np.exp(_log_stable(beta, gen, size))
    return float(out) if size is None else out


def lbeta_sample(beta: float, rng, size: int | Sequence[int] | None = None):
    """Draws of L_beta = S_beta^(-beta), whose density is M_beta."""
    gen = _as_generator(rng)
    with np.errstate(over="ignore", under="ignore"):
        out = np.exp(-beta * _log_stable(beta, gen, size))
    return float(out) if size is None else out
