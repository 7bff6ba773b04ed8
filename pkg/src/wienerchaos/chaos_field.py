"""Functionals of a chaos solution: moments, pathwise values and the u_h pairing."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .discretization import OperatorSpec, SpatialGrid, ThetaStepper, assemble_A, assemble_M, DiscreteOperator
from .multiindex import WeightSequence
from .propagator import ChaosSolution, TimeGrid
from .stochastic_basis import (
    GaussianSample,
    TemporalBasis,
    TestFunctionH,
    h_coefficients,
    wick_weights,
    xi_matrix,
)

VARIANCE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class MomentReport:
    t: float
    mean: np.ndarray
    second_moment: np.ndarray
    variance: np.ndarray
    N: int
    size: int  # number of multi-indices used

    def to_csv(self, path, grid: SpatialGrid) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{i + 1}" for i in range(grid.d)] + ["mean", "second_moment", "variance"])
            for row in np.vstack([grid.points, self.mean, self.second_moment, self.variance]).T:
                w.writerow([f"{v:.17g}" for v in row])


def mean_field(sol: ChaosSolution, t: float) -> np.ndarray:
    """``E u(t) = u_(0)(t)``; higher basis elements have zero mean."""
    return sol.at(t)[0].copy()


def second_moment_field(sol: ChaosSolution, t: float) -> np.ndarray:
    """``E u^2 = sum_alpha u_alpha^2`` over the truncated set (unweighted coefficients)."""
    U = sol.at(t)
    return np.einsum("ap,ap->p", U, U)


def moments(sol: ChaosSolution, t: float) -> MomentReport:
    mean = mean_field(sol, t)
    second = second_moment_field(sol, t)
    var = second - mean**2
    low = float(var.min())
    if low < -VARIANCE_TOLERANCE:
        warnings.warn(f"negative variance {low:.3e} beyond tolerance; clipping to 0", RuntimeWarning, stacklevel=2)
    return MomentReport(float(t), mean, second, np.maximum(var, 0.0), sol.N, len(sol.index_set))


def weighted_norm(sol: ChaosSolution, Q: WeightSequence | None, t: float) -> float:
    """``sqrt(sum_alpha q^{2 alpha} |u_alpha(t)|^2)`` with the discrete L2 norm."""
    w2 = np.ones(len(sol.index_set)) if Q is None else sol.weights(Q) ** 2
    return float(np.sqrt(w2 @ sol.norms2[sol.tgrid.node(t)]))


def evaluate_samples(sol: ChaosSolution, xi, t: float, backend: str | None = None) -> np.ndarray:
    """Pathwise fields ``sum_alpha u_alpha xi_alpha`` for a batch (S, I, K) -> (S, npts)."""
    return xi_matrix(sol.index_set, xi, backend=backend) @ sol.at(t)


def evaluate_sample(sol: ChaosSolution, sample: GaussianSample, t: float) -> np.ndarray:
    xi = sample.xi if isinstance(sample, GaussianSample) else np.asarray(sample, dtype=float)
    if xi.ndim != 2 or xi.shape[0] < sol.index_set.I or xi.shape[1] < sol.index_set.K:
        raise ValueError(f"sample of shape {xi.shape} does not cover I={sol.index_set.I}, K={sol.index_set.K}")
    return evaluate_samples(sol, xi[None], t)[0]


def duality_pair(u: np.ndarray, v: np.ndarray) -> np.ndarray | float:
    """``<<u, v>> = sum_alpha u_alpha v_alpha`` over the leading axis.

    Either family may hold scalars or fields per index; the result has the
    shape of the trailing axes.
    """
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    if u.shape[0] != v.shape[0]:
        raise ValueError(f"families have {u.shape[0]} and {v.shape[0]} members")
    out = np.tensordot(v, u, axes=(0, 0)) if v.ndim == 1 else np.tensordot(u, v, axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


def pair_with_test(sol: ChaosSolution, h: TestFunctionH, t: float | None = None) -> np.ndarray:
    """``u_h(t) = sum_alpha h^alpha / sqrt(alpha!) u_alpha(t)``.

    With ``t=None`` the whole stored trajectory is returned, shape (n_stored, npts).
    """
    w = wick_weights(h_coefficients(h, sol.basis)[: sol.index_set.I, : sol.index_set.K], sol.index_set)
    if t is None:
        return np.einsum("a,sap->sp", w, sol.coefficients)
    return duality_pair(sol.at(t), w)


def solve_uh_direct(spec: OperatorSpec, h: TestFunctionH, grid: SpatialGrid, tgrid: TimeGrid,
                    u0: np.ndarray, theta: float = 0.5) -> np.ndarray:
    """theta-scheme for ``du_h/dt = (A + h_k M_k) u_h + f + h_k g_k``; returns (M + 1, npts)."""
    if h.K > spec.K:
        raise ValueError(f"test function has {h.K} channels, spec has {spec.K}")
    x = grid.points
    Ms = [assemble_M(spec, grid, k, 0.0) for k in range(1, h.K + 1)] if spec.time_homogeneous else None
    A0 = assemble_A(spec, grid, 0.0) if spec.time_homogeneous else None

    def operator(t: float) -> DiscreteOperator:
        A = A0 if A0 is not None else assemble_A(spec, grid, t)
        hv = h(t)
        mat = A.matrix
        for k in range(h.K):
            Mk = Ms[k] if Ms is not None else assemble_M(spec, grid, k + 1, t)
            mat = mat + float(hv[k]) * Mk.matrix
        return DiscreteOperator(mat.tocsr(), A.form, t)

    def source(t: float):
        s = spec.f(t, x) if spec.has_forcing else None
        if spec.has_noise_forcing:
            g = spec.g(t, x)[: h.K]
            hv = np.asarray(h(t), dtype=float)
            s = (0.0 if s is None else s) + hv @ g
        return s

    stepper = ThetaStepper(operator, tgrid.dt, theta, time_homogeneous=False)
    times = tgrid.nodes
    out = np.empty((tgrid.M + 1, grid.size))
    out[0] = np.asarray(u0, dtype=float).ravel()
    s_now = source(0.0)
    for m in range(tgrid.M):
        s_next = source(times[m + 1])
        out[m + 1] = stepper.step(out[m], times[m], s_now, s_next)
        s_now = s_next
    return out


@dataclass(frozen=True)
class UhComparison:
    times: np.ndarray
    l2_error: np.ndarray  # relative, per stored time
    max_error: np.ndarray  # absolute sup-norm error

    @property
    def worst(self) -> float:
        return float(self.l2_error.max())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "l2_relative_error", "max_error"])
            for row in zip(self.times, self.l2_error, self.max_error):
                w.writerow([f"{v:.17g}" for v in row])


def compare_uh(sol: ChaosSolution, h: TestFunctionH, direct: np.ndarray) -> UhComparison:
    """Relative L2 error of the chaos pairing against a direct u_h trajectory."""
    chaos = pair_with_test(sol, h)
    ref = direct[sol.stored_nodes]
    err = sol.grid.norm2(chaos - ref)
    scale = sol.grid.norm2(ref)
    rel = np.sqrt(err / np.where(scale > 0, scale, 1.0))
    return UhComparison(sol.stored_times, rel, np.abs(chaos - ref).max(axis=1))
