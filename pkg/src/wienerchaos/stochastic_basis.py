"""Hermite polynomials, temporal bases and the Cameron-Martin functions.

The Gaussian coordinates of the driving noise are ``xi_ik = int_0^T m_i dw_k``
for an orthonormal temporal basis ``m_i`` on ``[0, T]``. The basis functions
``xi_alpha`` are normalized products of probabilists' Hermite polynomials of
those coordinates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy.integrate import simpson

from . import _kernels
from .multiindex import MultiIndex, MultiIndexSet, factorial

DEFAULT_QUADRATURE_INTERVALS = 1024


def hermite(n: int, t):
    """Probabilists' Hermite polynomial He_n(t) via the three-term recurrence."""
    if n < 0:
        raise ValueError("Hermite degree must be nonnegative")
    t = np.asarray(t, dtype=float)
    prev, cur = np.ones_like(t), t.copy()
    if n == 0:
        return prev if prev.ndim else float(prev)
    for j in range(1, n):
        prev, cur = cur, t * cur - j * prev
    return cur if cur.ndim else float(cur)


class TemporalBasis(Protocol):
    """Bounded orthonormal system ``m_1..m_I`` on ``[0, T]``."""

    T: float
    I: int

    def values(self, t) -> np.ndarray:
        """Array of shape (I,) + shape(t) with ``m_i(t)`` along axis 0."""

    def antiderivatives(self, t) -> np.ndarray:
        """Array of shape (I,) + shape(t) with ``int_0^t m_i(s) ds``."""


@dataclass(frozen=True)
class CosineBasis:
    """``m_1 = 1/sqrt(T)``, ``m_i = sqrt(2/T) cos(pi (i-1) t / T)`` for i >= 2."""

    T: float
    I: int

    def __post_init__(self) -> None:
        if self.T <= 0:
            raise ValueError("time horizon must be positive")
        if self.I < 1:
            raise ValueError("need at least one temporal mode")

    def _check_time(self, t: np.ndarray) -> None:
        slack = 1e-12 * self.T
        if np.any(t < -slack) or np.any(t > self.T + slack):
            raise ValueError(f"time outside [0, {self.T}]")

    def eval(self, i: int, t):
        if not 1 <= i <= self.I:
            raise IndexError(f"mode {i} outside 1..{self.I}")
        t = np.asarray(t, dtype=float)
        self._check_time(t)
        if i == 1:
            out = np.full_like(t, 1.0 / math.sqrt(self.T))
        else:
            out = math.sqrt(2.0 / self.T) * np.cos(math.pi * (i - 1) * t / self.T)
        return out if out.ndim else float(out)

    def values(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        self._check_time(t)
        j = np.arange(self.I).reshape((-1,) + (1,) * t.ndim)
        out = math.sqrt(2.0 / self.T) * np.cos(math.pi * j * t / self.T)
        out[0] = 1.0 / math.sqrt(self.T)
        return out

    def antiderivatives(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        self._check_time(t)
        out = np.empty((self.I,) + t.shape)
        out[0] = t / math.sqrt(self.T)
        if self.I > 1:
            j = np.arange(1, self.I).reshape((-1,) + (1,) * t.ndim)
            out[1:] = math.sqrt(2.0 * self.T) / (math.pi * j) * np.sin(math.pi * j * t / self.T)
        return out


# ---------------------------------------------------------------------------
# Gaussian samples


@dataclass(frozen=True)
class GaussianSample:
    """One realization of the I x K array ``xi_ik``."""

    xi: np.ndarray
    seed: int | None = None
    index: int | None = None

    def __post_init__(self) -> None:
        xi = np.array(self.xi, dtype=float)
        if xi.ndim != 2:
            raise ValueError("xi must be an I x K array")
        if not np.all(np.isfinite(xi)):
            raise ValueError("xi must be finite")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @property
    def I(self) -> int:
        return self.xi.shape[0]

    @property
    def K(self) -> int:
        return self.xi.shape[1]

    def to_csv(self, path) -> None:
        """Row = temporal mode i, column = channel k."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i"] + [f"k={k}" for k in range(1, self.K + 1)])
            for i, row in enumerate(self.xi, start=1):
                w.writerow([i] + [f"{v:.17g}" for v in row])

    @classmethod
    def from_csv(cls, path) -> GaussianSample:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        return cls(np.array([[float(v) for v in row[1:]] for row in rows[1:]]))


def draw_samples(I: int, K: int, count: int, seed: int) -> np.ndarray:
    """Array (count, I, K) of independent standard normals."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((count, I, K))


def draw_sample(I: int, K: int, seed: int, index: int = 0) -> GaussianSample:
    """The ``index``-th sample of the stream seeded by ``seed``."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    return GaussianSample(rng.standard_normal((I, K)), seed=seed, index=index)


def _as_xi(sample) -> np.ndarray:
    return sample.xi if isinstance(sample, GaussianSample) else np.asarray(sample, dtype=float)


def xi_alpha(alpha: MultiIndex, sample) -> float:
    """``prod H_{alpha_i^k}(xi_ik) / sqrt(alpha!)`` for one sample."""
    xi = _as_xi(sample)
    out = 1.0
    for (i, k), c in alpha.entries:
        if i > xi.shape[0] or k > xi.shape[1]:
            raise ValueError(f"multi-index entry {(i, k)} outside sample of shape {xi.shape}")
        out *= hermite(c, xi[i - 1, k - 1])
    return out / math.sqrt(factorial(alpha))


def xi_matrix(index_set: MultiIndexSet, xi, backend: str | None = None) -> np.ndarray:
    """``xi_alpha`` for a batch of samples: (S, I, K) -> (S, len(index_set))."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 2:
        xi = xi[None]
    if xi.shape[1] < index_set.I or xi.shape[2] < index_set.K:
        raise ValueError(f"samples of shape {xi.shape[1:]} do not cover I={index_set.I}, K={index_set.K}")
    table = _kernels.hermite_table(xi, index_set.N, backend=backend)
    mode, chan, cnt = index_set.padded_support
    return _kernels.xi_products(table, mode, chan, cnt, backend=backend)


def gaussian_to_path(sample, basis: TemporalBasis, k: int, t):
    """I-mode reconstruction ``w_k(t) = sum_i xi_ik int_0^t m_i``."""
    xi = _as_xi(sample)
    if not 1 <= k <= xi.shape[1]:
        raise IndexError(f"channel {k} outside 1..{xi.shape[1]}")
    anti = basis.antiderivatives(t)
    out = np.tensordot(xi[: basis.I, k - 1], anti, axes=(0, 0))
    return out if np.ndim(out) else float(out)


def paths_on_grid(xi, basis: TemporalBasis, times: np.ndarray) -> np.ndarray:
    """Reconstructed paths for a batch: (S, I, K) -> (S, len(times), K)."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 2:
        xi = xi[None]
    anti = basis.antiderivatives(np.asarray(times, dtype=float))  # (I, nt)
    return np.einsum("sik,it->stk", xi[:, : basis.I, :], anti)


# ---------------------------------------------------------------------------
# Test functions h and Wick exponentials


@dataclass(frozen=True)
class TestFunctionH:
    """K bounded functions ``h_k`` on ``[0, T]``, each vectorized over time."""

    __test__ = False  # not a pytest class

    funcs: tuple[Callable[[np.ndarray], np.ndarray], ...]

    @classmethod
    def zero(cls, K: int) -> TestFunctionH:
        return cls(tuple((lambda t: np.zeros_like(np.asarray(t, dtype=float))) for _ in range(K)))

    @classmethod
    def from_modes(cls, coefficients, basis: TemporalBasis) -> TestFunctionH:
        """``h_k = sum_i c[i, k] m_i`` for an (I', K) coefficient array."""
        c = np.asarray(coefficients, dtype=float)

        def make(k):
            return lambda t: np.tensordot(c[:, k], basis.values(t)[: c.shape[0]], axes=(0, 0))

        return cls(tuple(make(k) for k in range(c.shape[1])))

    @property
    def K(self) -> int:
        return len(self.funcs)

    def __call__(self, t) -> np.ndarray:
        """Values with shape (K,) + shape(t)."""
        t = np.asarray(t, dtype=float)
        return np.stack([np.broadcast_to(np.asarray(f(t), dtype=float), t.shape) for f in self.funcs])

    def l2_norm(self, T: float, intervals: int = DEFAULT_QUADRATURE_INTERVALS) -> float:
        s = np.linspace(0.0, T, intervals + 1)
        return float(np.sqrt(simpson((self(s) ** 2).sum(axis=0), x=s)))


def h_coefficients(h: TestFunctionH, basis: TemporalBasis,
                   intervals: int = DEFAULT_QUADRATURE_INTERVALS) -> np.ndarray:
    """``h_ik = int_0^T h_k m_i dt`` by composite Simpson; shape (I, K)."""
    s = np.linspace(0.0, basis.T, intervals + 1)
    hv = h(s)  # (K, ns)
    mv = basis.values(s)  # (I, ns)
    return simpson(mv[:, None, :] * hv[None, :, :], x=s, axis=-1)


def h_power(hc: np.ndarray, alpha: MultiIndex) -> float:
    """Monomial ``h^alpha = prod h_ik^{alpha_i^k}``."""
    out = 1.0
    for (i, k), c in alpha.entries:
        out *= hc[i - 1, k - 1] ** c
    return out


def wick_weights(hc: np.ndarray, index_set: MultiIndexSet) -> np.ndarray:
    """``h^alpha / sqrt(alpha!)`` for every index of the set."""
    return np.array([h_power(hc, a) for a in index_set]) / index_set.sqrt_factorials


def wick_exponential(h: TestFunctionH, sample, basis: TemporalBasis, t: float | None = None,
                     intervals: int = DEFAULT_QUADRATURE_INTERVALS) -> float:
    """``exp(sum_k int_0^t h_k dw_k - 1/2 int_0^t h_k^2 ds)`` on the reconstructed path.

    The stochastic integral uses ``dw_k = sum_i xi_ik m_i(s) ds``.
    """
    t = basis.T if t is None else float(t)
    xi = _as_xi(sample)
    s = np.linspace(0.0, t, intervals + 1)
    hv = h(s)  # (K, ns)
    dw = np.tensordot(xi[: basis.I].T, basis.values(s), axes=(1, 0))  # (K, ns)
    exponent = simpson((hv * dw - 0.5 * hv**2).sum(axis=0), x=s)
    return float(np.exp(exponent))


def wick_series(hc: np.ndarray, xi, index_set: MultiIndexSet, backend: str | None = None):
    """Truncated series ``sum_{alpha in set} h^alpha / sqrt(alpha!) xi_alpha``.

    Returns a scalar for one sample, an array for a batch.
    """
    xi = np.asarray(_as_xi(xi), dtype=float)
    single = xi.ndim == 2
    vals = xi_matrix(index_set, xi, backend=backend) @ wick_weights(hc, index_set)
    return float(vals[0]) if single else vals


def sample_batch(samples: Sequence[GaussianSample]) -> np.ndarray:
    return np.stack([s.xi for s in samples])


def write_samples(samples: Sequence[GaussianSample], directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for n, s in enumerate(samples):
        p = directory / f"sample_{n:05d}.csv"
        s.to_csv(p)
        paths.append(p)
    return paths
