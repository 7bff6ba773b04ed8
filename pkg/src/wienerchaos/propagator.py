"""Lower-triangular propagator system for the chaos coefficients.

Each coefficient ``u_alpha`` solves the deterministic equation

    du_alpha/dt = A u_alpha + f 1{|alpha| = 0}
                  + sum_{i,k} sqrt(alpha_i^k) m_i(t) (M_k u_{alpha^-(i,k)} + g_k 1{|alpha| = 1})

with ``u_alpha(0) = u0 1{|alpha| = 0}``. Sources of order n read only order
n - 1, so all orders are marched together: inside one time step the orders
are advanced in increasing order, each using the freshly advanced order below.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .discretization import (
    LinearSolveError,
    OperatorSpec,
    SpatialGrid,
    ThetaStepper,
    assemble_A,
    assemble_M,
    write_field_csv,
)
from .multiindex import MultiIndex, MultiIndexSet, WeightSequence, render, weight
from .stochastic_basis import TemporalBasis

DEFAULT_BYTE_BUDGET = 1 << 30


class StorageBudgetExceeded(MemoryError):
    """Coefficient storage would exceed the configured byte budget."""


class ChaosBlowUp(FloatingPointError):
    """A coefficient became non-finite during the solve."""

    def __init__(self, alpha: MultiIndex, t: float):
        super().__init__(f"coefficient {render(alpha) or 'empty'} became non-finite at t={t:.6g}")
        self.alpha = alpha
        self.t = t


class TruncationWarning(UserWarning):
    """Chaos energies do not decay with the order."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform nodes ``t_m = m T / M``, m = 0..M."""

    T: float
    M: int

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError("time horizon must be positive")
        if self.M < 1:
            raise ValueError("need at least one time step")

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.M + 1)

    def node(self, t: float) -> int:
        """Index of the node equal to ``t`` (to rounding)."""
        m = int(round(t / self.dt))
        if m < 0 or m > self.M or abs(m * self.dt - t) > 1e-9 * max(self.T, 1.0):
            raise ValueError(f"t={t} is not a node of the time grid (dt={self.dt})")
        return m


@dataclass
class ChaosSolution:
    """Truncated family of chaos coefficients on a space-time grid."""

    index_set: MultiIndexSet
    grid: SpatialGrid
    tgrid: TimeGrid
    basis: TemporalBasis
    spec: OperatorSpec
    stored_nodes: np.ndarray
    coefficients: np.ndarray  # (len(stored_nodes), len(index_set), grid.size)
    norms2: np.ndarray  # (M + 1, len(index_set)), squared L2 norms at every node
    theta: float = 0.5
    dependency_log: list[np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self._slot = {int(m): s for s, m in enumerate(self.stored_nodes)}

    @property
    def N(self) -> int:
        return self.index_set.N

    @property
    def stored_times(self) -> np.ndarray:
        return self.tgrid.nodes[self.stored_nodes]

    def slot(self, t: float) -> int:
        m = self.tgrid.node(t)
        if m not in self._slot:
            raise KeyError(f"coefficients at t={t} were not stored")
        return self._slot[m]

    def at(self, t: float) -> np.ndarray:
        """All coefficients at a stored time, shape (len(index_set), npts)."""
        return self.coefficients[self.slot(t)]

    def coefficient(self, alpha: MultiIndex, t: float | None = None) -> np.ndarray:
        """One coefficient at time t, or its stored series when t is None."""
        p = self.index_set.position(alpha)
        if t is None:
            return self.coefficients[:, p, :]
        return self.coefficients[self.slot(t), p, :]

    def weights(self, Q: WeightSequence) -> np.ndarray:
        return np.array([weight(Q, a) for a in self.index_set])

    def apply_weights(self, Q: WeightSequence) -> ChaosSolution:
        """The family ``{q^alpha u_alpha}``."""
        w = self.weights(Q)
        return ChaosSolution(self.index_set, self.grid, self.tgrid, self.basis, self.spec,
                             self.stored_nodes.copy(), self.coefficients * w[None, :, None],
                             self.norms2 * w[None, :] ** 2, self.theta, self.dependency_log)

    def restrict(self, N: int) -> ChaosSolution:
        """Drop all orders above N."""
        sub = self.index_set.restrict(N)
        n = len(sub)
        return ChaosSolution(sub, self.grid, self.tgrid, self.basis, self.spec, self.stored_nodes.copy(),
                             self.coefficients[:, :n], self.norms2[:, :n], self.theta)


def _store_plan(tgrid: TimeGrid, store) -> np.ndarray:
    if isinstance(store, str):
        if store == "all":
            return np.arange(tgrid.M + 1)
        if store == "final":
            return np.array([0, tgrid.M])
        raise ValueError(f"unknown store option {store!r}")
    nodes = {0, tgrid.M} | {tgrid.node(float(t)) for t in store}
    return np.array(sorted(nodes))


def _lowering_blocks(index_set: MultiIndexSet):
    """Per order n >= 1: padded edge arrays with parents relative to the order n-1 block."""
    parent, sqrt_count, mode, chan = index_set.lowering
    blocks = []
    for n in range(1, index_set.N + 1):
        sl, prev = index_set.order_slices[n], index_set.order_slices[n - 1]
        par = parent[sl].copy()
        live = par >= 0
        if np.any((par[live] < prev.start) | (par[live] >= prev.stop)):
            raise AssertionError("decrement left the previous order block")
        par[live] -= prev.start
        blocks.append((np.ascontiguousarray(par), np.ascontiguousarray(sqrt_count[sl]),
                       np.ascontiguousarray(mode[sl]), np.ascontiguousarray(chan[sl])))
    return blocks


def solve(spec: OperatorSpec, grid: SpatialGrid, tgrid: TimeGrid, basis: TemporalBasis,
          index_set: MultiIndexSet, u0: np.ndarray, *, theta: float = 0.5, store="all",
          byte_budget: int = DEFAULT_BYTE_BUDGET, audit: bool = False,
          backend: str | None = None) -> ChaosSolution:
    """Solve the propagator for every index of ``index_set``.

    ``store`` is "all", "final" (initial and final node) or a list of times at
    which full coefficient fields are kept; squared norms are recorded at
    every node regardless.
    """
    if abs(basis.T - tgrid.T) > 1e-12 * tgrid.T:
        raise ValueError("temporal basis and time grid must share the horizon T")
    if basis.I < index_set.I:
        raise ValueError(f"basis has {basis.I} modes, index set needs {index_set.I}")
    if index_set.K > spec.K:
        raise ValueError(f"index set uses {index_set.K} channels, spec has {spec.K}")
    u0 = np.asarray(u0, dtype=float).ravel()
    if u0.size != grid.size or not np.all(np.isfinite(u0)):
        raise ValueError("initial condition must be a finite field on the grid")

    nodes = _store_plan(tgrid, store)
    n_idx, npts = len(index_set), grid.size
    need = nodes.size * n_idx * npts * 8
    if need > byte_budget:
        raise StorageBudgetExceeded(
            f"storing {nodes.size} x {n_idx} x {npts} coefficients needs {need / 2**20:.1f} MiB, "
            f"budget is {byte_budget / 2**20:.1f} MiB; store fewer times or lower the truncation")

    K = index_set.K
    dt = tgrid.dt
    x = grid.points
    stepper = ThetaStepper(lambda t: assemble_A(spec, grid, t), dt, theta, spec.time_homogeneous)
    m_cache: dict[float, list] = {}

    def noise_ops(t: float):
        key = 0.0 if spec.time_homogeneous else t
        if key not in m_cache:
            if not spec.time_homogeneous:
                m_cache.clear()
            m_cache[key] = [assemble_M(spec, grid, k, t).matrix for k in range(1, K + 1)]
        return m_cache[key]

    slices = index_set.order_slices
    blocks = _lowering_blocks(index_set)
    order1 = slices[1] if index_set.N >= 1 else slice(0, 0)
    # order-1 indices carry a single entry (i, k) with count 1
    mode1, chan1 = index_set.padded_support[0][order1, 0], index_set.padded_support[1][order1, 0]

    log = None
    if audit:
        log = []
        for n, (par, _, _, _) in enumerate(blocks, start=1):
            sl, prev = slices[n], slices[n - 1]
            rows, cols = np.nonzero(par >= 0)
            log.append(np.column_stack([rows + sl.start, par[rows, cols] + prev.start]))

    def sources(n: int, t: float, U: np.ndarray) -> np.ndarray | None:
        """Source for the order-n block at time t, reading only order n - 1 of U."""
        if n == 0:
            if not spec.has_forcing:
                return None
            return spec.f(t, x)[None, :]
        par, w, mode, chan = blocks[n - 1]
        prev = U[slices[n - 1]]
        mu = np.stack([np.asarray((Mk @ prev.T).T) for Mk in noise_ops(t)])
        mvals = np.ascontiguousarray(basis.values(t)[: index_set.I])
        out = _kernels.accumulate_sources(mu, par, w, mode, chan, mvals, backend=backend)
        if n == 1 and spec.has_noise_forcing:
            g = spec.g(t, x)
            out += mvals[mode1, None] * g[chan1]
        return out

    U = np.zeros((n_idx, npts))
    U[0] = u0
    coeffs = np.empty((nodes.size, n_idx, npts))
    norms2 = np.empty((tgrid.M + 1, n_idx))
    norms2[0] = grid.norm2(U)
    slot = 0
    if nodes[0] == 0:
        coeffs[0] = U
        slot = 1

    times = tgrid.nodes
    S_now = [sources(n, 0.0, U) for n in range(index_set.N + 1)]
    for m in range(tgrid.M):
        t, t_next = times[m], times[m + 1]
        S_next = []
        for n in range(index_set.N + 1):
            sl = slices[n]
            # U already holds orders < n at t_next
            s_next = sources(n, t_next, U)
            try:
                U[sl] = stepper.step(U[sl], t, S_now[n], s_next)
            except LinearSolveError:
                block = U[sl]
                bad = int(np.argmax(~np.all(np.isfinite(block), axis=1))) if block.size else 0
                raise ChaosBlowUp(index_set[sl.start + bad], float(t_next)) from None
            if not np.all(np.isfinite(U[sl])):
                bad = int(np.argmax(~np.all(np.isfinite(U[sl]), axis=1)))
                raise ChaosBlowUp(index_set[sl.start + bad], float(t_next))
            S_next.append(s_next)
        S_now = S_next
        norms2[m + 1] = grid.norm2(U)
        if slot < nodes.size and nodes[slot] == m + 1:
            coeffs[slot] = U
            slot += 1

    return ChaosSolution(index_set, grid, tgrid, basis, spec, nodes, coeffs, norms2, theta, log)


# ---------------------------------------------------------------------------
# Energy diagnostics


def energy_curves(sol: ChaosSolution, Q: WeightSequence | None = None) -> np.ndarray:
    """``F_n(t_m)`` for every node and order, shape (M + 1, N + 1)."""
    w2 = np.ones(len(sol.index_set)) if Q is None else sol.weights(Q) ** 2
    weighted = sol.norms2 * w2[None, :]
    return np.stack([weighted[:, sl].sum(axis=1) for sl in sol.index_set.order_slices], axis=1)


def energy_by_order(sol: ChaosSolution, Q: WeightSequence | None, n: int, t: float) -> float:
    """``F_n(t) = sum_{|alpha| = n} q^{2 alpha} |u_alpha(t)|^2``."""
    if not 0 <= n <= sol.N:
        raise ValueError(f"order {n} outside 0..{sol.N}")
    return float(energy_curves(sol, Q)[sol.tgrid.node(t), n])


@dataclass(frozen=True)
class EnergyReport:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    passed: bool
    homogeneous: bool
    C2: float

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def worst_ratio(self) -> float:
        """Largest lhs/rhs over nodes after t = 0, where the two sides agree by construction."""
        lhs, rhs = (self.lhs[1:], self.rhs[1:]) if self.lhs.size > 1 else (self.lhs, self.rhs)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
        return float(np.max(r))


def check_energy_estimate(sol: ChaosSolution, Q: WeightSequence, C2: float, u0: np.ndarray,
                          C_f: float = 1.0, rtol: float = 1e-12) -> EnergyReport:
    """Compare the weighted energy with its a priori bound at every node.

    Without forcing the bound is ``e^{C2 t} |u0|^2``; otherwise
    ``3 e^{C2 t} (|u0|^2 + C_f int |f|^2 + sum_k int q_k^2 |g_k|^2)`` with the
    L2 norm of f standing in for its dual norm (an upper bound) and ``C_f``
    supplied by the caller.
    """
    times = sol.tgrid.nodes
    lhs = energy_curves(sol, Q).sum(axis=1)
    u0n = float(sol.grid.norm2(np.asarray(u0, dtype=float).ravel()))
    spec = sol.spec
    homogeneous = not spec.has_forcing and not spec.has_noise_forcing
    if homogeneous:
        rhs = np.exp(C2 * times) * u0n
    else:
        x = sol.grid.points
        q2 = np.asarray(Q.q[: spec.K]) ** 2
        dens = np.array([C_f * (sol.grid.norm2(spec.f(t, x)) if spec.has_forcing else 0.0)
                         + (float(q2 @ sol.grid.norm2(spec.g(t, x))) if spec.has_noise_forcing else 0.0)
                         for t in times])
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(times))])
        rhs = 3.0 * np.exp(C2 * times) * (u0n + cum)
    passed = bool(np.all(lhs <= rhs * (1 + rtol) + 1e-300))
    return EnergyReport(times, lhs, rhs, passed, homogeneous, float(C2))


@dataclass(frozen=True)
class TailReport:
    energies: np.ndarray  # F_n(T), n = 0..N
    ratio: float  # fitted geometric decay ratio of F_n for n >= 1
    last_ratio: float
    tail_mass: float  # estimated relative mass beyond order N
    non_decaying: bool

    def as_dict(self) -> dict:
        return {"energies": self.energies.tolist(), "ratio": self.ratio, "last_ratio": self.last_ratio,
                "tail_mass": self.tail_mass, "non_decaying": self.non_decaying}


def truncation_diagnostics(sol: ChaosSolution, Q: WeightSequence | None = None,
                           t: float | None = None) -> TailReport:
    """Geometric fit of the order energies and the implied neglected tail."""
    if sol.N < 2:
        raise ValueError("need at least orders 0..2 for a tail estimate")
    t = sol.tgrid.T if t is None else t
    F = energy_curves(sol, Q)[sol.tgrid.node(t)]
    total = float(F.sum())
    higher = F[1:]
    if total == 0.0 or np.all(higher <= 1e-300 + 1e-15 * total):
        return TailReport(F, 0.0, 0.0, 0.0, False)
    n = np.arange(1, sol.N + 1)
    live = higher > 0
    slope = np.polyfit(n[live], np.log(higher[live]), 1)[0] if live.sum() >= 2 else -np.inf
    ratio = float(np.exp(slope))
    last = float(F[-1] / F[-2]) if F[-2] > 0 else math.inf
    non_decaying = ratio >= 1.0 or last >= 1.0
    if non_decaying:
        tail = math.inf
        warnings.warn(f"chaos energies F_n do not decay (fitted ratio {ratio:.3g}, last ratio {last:.3g}); "
                      "the truncation is under-resolved or the unweighted series diverges",
                      TruncationWarning, stacklevel=2)
    else:
        r = min(ratio, last)
        tail = float(F[-1] * r / (1.0 - r) / total)
    return TailReport(F, ratio, last, tail, non_decaying)


# ---------------------------------------------------------------------------
# Export


def file_stem(alpha: MultiIndex) -> str:
    """Portable file name: ``i-k-count`` per entry joined by ``_``, e.g. ``1-1-2_3-1-1``."""
    return "_".join(f"{i}-{k}-{c}" for (i, k), c in alpha.entries) or "empty"


def export_solution(sol: ChaosSolution, directory, times: Sequence[float] | None = None,
                    extra: dict | None = None) -> Path:
    """Write one CSV per multi-index plus ``manifest.json``; returns the manifest path."""
    directory = Path(directory)
    coef_dir = directory / "coefficients"
    coef_dir.mkdir(parents=True, exist_ok=True)
    times = [sol.tgrid.T] if times is None else list(times)
    slots = [sol.slot(t) for t in times]
    files = {}
    for p, alpha in enumerate(sol.index_set):
        name = file_stem(alpha) + ".csv"
        cols = {f"t={sol.stored_times[s]:.17g}": sol.coefficients[s, p] for s in slots}
        write_field_csv(coef_dir / name, sol.grid, cols)
        files[render(alpha)] = f"coefficients/{name}"
    manifest = {
        "truncation": {"I": sol.index_set.I, "K": sol.index_set.K, "N": sol.index_set.N,
                       "count": len(sol.index_set)},
        "grid": {"d": sol.grid.d, "L": list(sol.grid.L), "n": list(sol.grid.n)},
        "time": {"T": sol.tgrid.T, "M": sol.tgrid.M, "theta": sol.theta},
        "exported_times": [float(sol.stored_times[s]) for s in slots],
        "coefficients": files,
    }
    manifest.update(extra or {})
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()
