"""Hot inner loops, each with a numba kernel and a pure-numpy twin.

The numba path is used when numba imports and ``WIENERCHAOS_NUMBA`` is not
set to ``0``/``false``/``off``. Every public function takes an optional
``backend`` ("numba" or "numpy") to force one path; tests and the benchmark
use it to compare the two.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_FLAG = os.environ.get("WIENERCHAOS_NUMBA", "1").strip().lower()
USE_NUMBA = HAVE_NUMBA and _FLAG not in {"0", "false", "off", "no"}
DEFAULT_BACKEND = "numba" if USE_NUMBA else "numpy"


def _resolve(backend: str | None) -> str:
    backend = backend or DEFAULT_BACKEND
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


# ---------------------------------------------------------------------------
# Normalized Hermite table: H_n(x) / sqrt(n!) for n = 0..nmax


def _hermite_table_np(x: np.ndarray, nmax: int) -> np.ndarray:
    out = np.empty(x.shape + (nmax + 1,))
    out[..., 0] = 1.0
    if nmax >= 1:
        out[..., 1] = x
    # He_{n+1}/sqrt((n+1)!) = (x He_n/sqrt(n!) - sqrt(n) He_{n-1}/sqrt((n-1)!)) / sqrt(n+1)
    for n in range(1, nmax):
        out[..., n + 1] = (x * out[..., n] - np.sqrt(n) * out[..., n - 1]) / np.sqrt(n + 1)
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _hermite_table_nb(x, nmax):  # x is 1D here
        out = np.empty((x.shape[0], nmax + 1))
        for s in range(x.shape[0]):
            out[s, 0] = 1.0
            if nmax >= 1:
                out[s, 1] = x[s]
            for n in range(1, nmax):
                out[s, n + 1] = (x[s] * out[s, n] - np.sqrt(n) * out[s, n - 1]) / np.sqrt(n + 1)
        return out


def hermite_table(x: np.ndarray, nmax: int, backend: str | None = None) -> np.ndarray:
    """Array of shape ``x.shape + (nmax + 1,)`` holding ``H_n(x)/sqrt(n!)``."""
    x = np.asarray(x, dtype=float)
    if _resolve(backend) == "numba":
        flat = _hermite_table_nb(np.ascontiguousarray(x.ravel()), int(nmax))
        return flat.reshape(x.shape + (nmax + 1,))
    return _hermite_table_np(x, int(nmax))


# ---------------------------------------------------------------------------
# Cameron-Martin basis values xi_alpha for a batch of Gaussian samples


def _xi_products_np(table, mode, chan, cnt):
    # table: (S, I, K, nmax+1); mode/chan/cnt: (P, D)
    S = table.shape[0]
    out = np.ones((S, mode.shape[0]))
    for j in range(mode.shape[1]):
        out *= table[:, mode[:, j], chan[:, j], cnt[:, j]]
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _xi_products_nb(table, mode, chan, cnt):
        S = table.shape[0]
        P, D = mode.shape
        out = np.ones((S, P))
        for s in range(S):
            for p in range(P):
                acc = 1.0
                for j in range(D):
                    acc *= table[s, mode[p, j], chan[p, j], cnt[p, j]]
                out[s, p] = acc
        return out


def xi_products(table: np.ndarray, mode: np.ndarray, chan: np.ndarray, cnt: np.ndarray,
                backend: str | None = None) -> np.ndarray:
    """Products ``prod_j table[s, mode[p,j], chan[p,j], cnt[p,j]]`` -> (S, P).

    Padding slots must point at count 0, whose table entry is exactly 1.
    """
    if _resolve(backend) == "numba":
        return _xi_products_nb(np.ascontiguousarray(table), mode, chan, cnt)
    return _xi_products_np(table, mode, chan, cnt)


# ---------------------------------------------------------------------------
# Propagator source terms: S[a] = sum_j w[a,j] * m[mode[a,j]] * MU[chan[a,j], parent[a,j]]


def _accumulate_np(mu, parent, weight, mode, chan, mvals):
    P, D = parent.shape
    out = np.zeros((P, mu.shape[2]))
    for j in range(D):
        live = parent[:, j] >= 0
        if not live.any():
            continue
        coef = weight[live, j] * mvals[mode[live, j]]
        out[live] += coef[:, None] * mu[chan[live, j], parent[live, j]]
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _accumulate_nb(mu, parent, weight, mode, chan, mvals):
        P, D = parent.shape
        npts = mu.shape[2]
        out = np.zeros((P, npts))
        for j in range(D):
            for a in range(P):
                b = parent[a, j]
                if b < 0:
                    continue
                coef = weight[a, j] * mvals[mode[a, j]]
                k = chan[a, j]
                for x in range(npts):
                    out[a, x] += coef * mu[k, b, x]
        return out


def accumulate_sources(mu: np.ndarray, parent: np.ndarray, weight: np.ndarray, mode: np.ndarray,
                       chan: np.ndarray, mvals: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Lower-order source terms for a block of multi-indices.

    ``mu`` has shape (K, n_parent, npts) and holds ``M_k u_beta`` for the
    parent block; ``parent`` indexes into its second axis (-1 = padding).
    """
    if _resolve(backend) == "numba":
        return _accumulate_nb(np.ascontiguousarray(mu), parent, weight, mode, chan, mvals)
    return _accumulate_np(mu, parent, weight, mode, chan, mvals)
