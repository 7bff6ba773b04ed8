"""Independent reference solutions.

Direct Monte Carlo simulation of the SPDE, backward stochastic characteristics
with a multiplicative weight, the pathwise check for the degenerate class
``a = 1/2 sigma sigma^T``, closed-form Fourier modes and a semigroup
quadrature for the first-order coefficients.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .discretization import (
    OperatorSpec,
    SpatialGrid,
    ThetaStepper,
    assemble_A,
    assemble_M,
    fourier_interpolate,
    parabolicity_classify,
)
from .multiindex import WeightSequence
from .propagator import ChaosSolution, TimeGrid
from .stochastic_basis import TemporalBasis

DEFAULT_CHUNK = 250


class SupercriticalConfiguration(ValueError):
    """Monte Carlo refused: the unweighted second moment grows without bound."""


class UnsupportedSpec(ValueError):
    """The operator lies outside the class a check supports."""


def default_threads() -> int:
    value = os.environ.get("WIENERCHAOS_THREADS")
    if value is None:
        return 1
    n = int(value)
    if n < 1:
        raise ValueError("WIENERCHAOS_THREADS must be a positive integer")
    return n


def path_rng(seed: int, path: int) -> np.random.Generator:
    """Generator for one path, derived from (seed, path index) only."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(path,)))


# ---------------------------------------------------------------------------
# Containers


@dataclass(frozen=True)
class PathBundle:
    """Brownian increments on a uniform grid: ``dw`` is (S, M, K), ``dw_tilde`` (S, M, K') or None."""

    tgrid: TimeGrid
    dw: np.ndarray
    dw_tilde: np.ndarray | None = None
    seed: int | None = None

    @property
    def count(self) -> int:
        return self.dw.shape[0]

    def paths(self) -> np.ndarray:
        """Cumulative paths ``w(t_m)``, shape (S, M + 1, K)."""
        S, _, K = self.dw.shape
        return np.concatenate([np.zeros((S, 1, K)), np.cumsum(self.dw, axis=1)], axis=1)


def generate_paths(tgrid: TimeGrid, K: int, count: int, seed: int, tilde_channels: int = 0,
                   first: int = 0) -> PathBundle:
    """Increments for paths ``first .. first + count - 1`` of the stream ``seed``."""
    sd = math.sqrt(tgrid.dt)
    dw = np.empty((count, tgrid.M, K))
    dwt = np.empty((count, tgrid.M, tilde_channels)) if tilde_channels else None
    for s in range(count):
        rng = path_rng(seed, first + s)
        dw[s] = sd * rng.standard_normal((tgrid.M, K))
        if dwt is not None:
            dwt[s] = sd * rng.standard_normal((tgrid.M, tilde_channels))
    return PathBundle(tgrid, dw, dwt, seed)


def bundle_from_samples(xi: np.ndarray, basis: TemporalBasis, tgrid: TimeGrid) -> PathBundle:
    """Increments of the reconstructed paths ``sum_i xi_ik int m_i`` on the time grid."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 2:
        xi = xi[None]
    anti = basis.antiderivatives(tgrid.nodes)  # (I, M + 1)
    w = np.einsum("sik,it->stk", xi[:, : basis.I, :], anti)
    return PathBundle(tgrid, np.diff(w, axis=1))


@dataclass(frozen=True)
class EstimatorResult:
    """Sample means with standard errors ``std / sqrt(count)``."""

    estimate: np.ndarray
    stderr: np.ndarray
    count: int
    seed: int | None

    def __post_init__(self) -> None:
        if self.count < 2:
            raise ValueError("an estimator needs at least two samples")

    def within(self, value, n_se: float = 3.0, floor: float = 0.0) -> np.ndarray:
        return np.abs(np.asarray(value) - self.estimate) <= n_se * self.stderr + floor

    def to_json(self) -> str:
        return json.dumps({"estimate": np.asarray(self.estimate).tolist(),
                           "stderr": np.asarray(self.stderr).tolist(),
                           "count": self.count, "seed": self.seed}, indent=2) + "\n"


class _Moments:
    """Running count, mean and centered sum of squares; merged with Chan's formula."""

    def __init__(self, shape):
        self.n = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    @classmethod
    def of(cls, batch: np.ndarray) -> _Moments:
        out = cls(batch.shape[1:])
        out.n = batch.shape[0]
        # shift by the first row so identical samples give an exact zero spread
        dev = batch - batch[0]
        shift = dev.mean(axis=0)
        out.mean = batch[0] + shift
        out.m2 = ((dev - shift) ** 2).sum(axis=0)
        return out

    def merge(self, other: _Moments) -> None:
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.n / n)
        self.m2 = self.m2 + other.m2 + delta**2 * (self.n * other.n / n)
        self.n = n

    def result(self, seed) -> EstimatorResult:
        var = self.m2 / (self.n - 1)
        return EstimatorResult(self.mean, np.sqrt(var / self.n), self.n, seed)


# ---------------------------------------------------------------------------
# Direct Monte Carlo


@dataclass(frozen=True)
class MonteCarloResult:
    mean: EstimatorResult
    second_moment: EstimatorResult
    t: float


def mc_spde(spec: OperatorSpec, grid: SpatialGrid, tgrid: TimeGrid, u0: np.ndarray, n_paths: int, seed: int,
            *, threads: int | None = None, chunk: int = DEFAULT_CHUNK, force: bool = False) -> MonteCarloResult:
    """Semi-implicit Euler-Maruyama for ``du = (A u + f) dt + (M_k u + g_k) dw_k``.

    Each step solves ``(I - dt A) u' = u + dt f + sum_k (M_k u + g_k) dw_k``.
    Paths draw from per-path seeds and are grouped in fixed chunks whose
    statistics are merged in chunk order, so the result does not depend on
    ``threads``.
    """
    verdict = parabolicity_classify(spec, WeightSequence.ones(spec.K), grid, T=tgrid.T)
    if verdict.kind == "none" and not force:
        raise SupercriticalConfiguration(
            f"symbol margin {verdict.margin:.3g} < 0: the unweighted second moment is unbounded; pass force=True")
    if n_paths < 2:
        raise ValueError("need at least two paths")
    threads = default_threads() if threads is None else threads
    u0 = np.asarray(u0, dtype=float).ravel()
    x = grid.points
    dt = tgrid.dt
    times = tgrid.nodes
    Ms = None if not spec.time_homogeneous else [assemble_M(spec, grid, k, 0.0).matrix for k in range(1, spec.K + 1)]

    def run_chunk(c: int):
        first = c * chunk
        count = min(chunk, n_paths - first)
        bundle = generate_paths(tgrid, spec.K, count, seed, first=first)
        # each chunk owns its stepper: factorizations are not shared across threads
        implicit = ThetaStepper(lambda t: assemble_A(spec, grid, t), dt, 1.0, spec.time_homogeneous)
        U = np.tile(u0, (count, 1))
        for m in range(tgrid.M):
            t = times[m]
            rhs = U.copy()
            if spec.has_forcing:
                rhs += dt * spec.f(t, x)
            g = spec.g(t, x) if spec.has_noise_forcing else None
            for k in range(spec.K):
                Mk = Ms[k] if Ms is not None else assemble_M(spec, grid, k + 1, t).matrix
                inc = np.asarray((Mk @ U.T).T)
                if g is not None:
                    inc += g[k]
                rhs += bundle.dw[:, m, k, None] * inc
            U = implicit.step(rhs, t)
            if not np.all(np.isfinite(U)):
                bad = int(np.argmax(~np.all(np.isfinite(U), axis=1)))
                raise FloatingPointError(f"Monte Carlo path {first + bad} blew up at t={times[m + 1]:.6g}")
        return _Moments.of(U), _Moments.of(U**2)

    n_chunks = -(-n_paths // chunk)
    if threads == 1:
        parts = [run_chunk(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run_chunk, range(n_chunks)))
    mean, second = parts[0]
    for m1, m2 in parts[1:]:
        mean.merge(m1)
        second.merge(m2)
    return MonteCarloResult(mean.result(seed), second.result(seed), tgrid.T)


# ---------------------------------------------------------------------------
# Backward characteristics


def residual_factor(spec: OperatorSpec, Q: WeightSequence, t: float, x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """``sigma_tilde`` with ``sigma_tilde sigma_tilde^T = 2 a - sum_k q_k^2 sigma_k sigma_k^T``.

    Symmetric square root by eigen-factorization; shape (d, d, P) for points (d, P).
    """
    q2 = np.asarray(Q.q[: spec.K]) ** 2
    sig = spec.sigma_values(t, x)
    R = 2.0 * spec.a(t, x) - np.einsum("k,ikp,jkp->ijp", q2, sig, sig)
    lam, vec = np.linalg.eigh(np.moveaxis(R, -1, 0))
    if np.any(lam < -tol):
        raise UnsupportedSpec(f"residual diffusion has negative eigenvalue {lam.min():.3g}; weights too large")
    root = np.einsum("pij,pj,pkj->pik", vec, np.sqrt(np.maximum(lam, 0.0)), vec)
    return np.moveaxis(root, 0, -1)


def has_residual_diffusion(spec: OperatorSpec, Q: WeightSequence, grid_points: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.abs(residual_factor(spec, Q, 0.0, grid_points)).max() > tol)


@dataclass(frozen=True)
class Characteristics:
    X: np.ndarray  # (S, d) positions X_{t,x}(0)
    gamma: np.ndarray  # (S,) weights gamma(t, 0, x)


def simulate_characteristics(spec: OperatorSpec, Q: WeightSequence, x, t: float, paths: PathBundle,
                             record: bool = False):
    """Euler-Maruyama for the backward equation from time ``t`` down to 0.

    The backward integral takes its integrand at the right end of each
    interval, so the scheme runs forward in reversed time ``r = t - s`` over
    the reversed increment sequence. Drift is ``b - sum_k q_k^2 sigma_k nu_k``
    and the weight accumulates ``c``, ``q_k nu_k`` and ``-1/2 q_k^2 nu_k^2``.

    With ``record=True`` the trajectories (S, J + 1, d) and running weights
    (S, J + 1) in reversed time are returned as well.
    """
    x = np.asarray(x, dtype=float).reshape(spec.d)
    J = paths.tgrid.node(t)
    dt = paths.tgrid.dt
    S = paths.count
    q = np.asarray(Q.q[: spec.K])
    X = np.tile(x, (S, 1))
    logg = np.zeros(S)
    need_tilde = has_residual_diffusion(spec, Q, x[:, None])
    if need_tilde and (paths.dw_tilde is None or paths.dw_tilde.shape[2] < spec.d):
        raise ValueError("residual diffusion present: paths need dw_tilde with d channels")
    traj = [X.copy()] if record else None
    weights = [np.ones(S)] if record else None
    for j in range(J):
        s = t - j * dt  # right end of the interval [s - dt, s]
        dw = paths.dw[:, J - 1 - j, :]
        pts = X.T
        sig = spec.sigma_values(s, pts)  # (d, K, S)
        nu = spec.nu(s, pts)  # (K, S)
        B = spec.b(s, pts) - np.einsum("k,ikp,kp->ip", q**2, sig, nu)
        step = B * dt + np.einsum("k,ikp,pk->ip", q, sig, dw)
        if need_tilde:
            st = residual_factor(spec, Q, s, pts)
            step = step + np.einsum("ijp,pj->ip", st, paths.dw_tilde[:, J - 1 - j, : spec.d])
        logg += spec.c(s, pts) * dt + np.einsum("k,kp,pk->p", q, nu, dw) - 0.5 * np.einsum("k,kp->p", q**2, nu**2) * dt
        X = X + step.T
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(logg)):
            raise FloatingPointError(f"characteristics left the finite range at s={s - dt:.6g}")
        if record:
            traj.append(X.copy())
            weights.append(np.exp(logg))
    out = Characteristics(X, np.exp(logg))
    if record:
        return out, np.stack(traj, axis=1), np.stack(weights, axis=1)
    return out


def feynman_kac_estimate(spec: OperatorSpec, Q: WeightSequence, x, t: float, outer: PathBundle,
                         u0: Callable[[np.ndarray], np.ndarray], *, n_inner: int = 1, seed: int = 0,
                         quadrature: str | None = None) -> EstimatorResult:
    """Conditional expectation of the characteristics functional given each outer path.

    ``u0`` maps points (d, P) to values (P,). Returns one estimate per outer
    path; with no residual diffusion the functional is outer-path measurable,
    ``n_inner`` is ignored and the standard errors are zero. Otherwise each
    outer path is paired with ``n_inner`` independent ``w_tilde`` paths drawn
    from ``(seed, outer index)``. Forcing terms need ``quadrature="right"``
    (right-endpoint rule, matching the backward integral).
    """
    if (spec.has_forcing or spec.has_noise_forcing) and quadrature != "right":
        raise ValueError("forcing terms present: specify quadrature='right'")
    x = np.asarray(x, dtype=float).reshape(spec.d)
    nested = has_residual_diffusion(spec, Q, x[:, None])
    if nested and n_inner < 2:
        raise ValueError("residual diffusion present: need n_inner >= 2")
    S = outer.count
    J = outer.tgrid.node(t)
    dt = outer.tgrid.dt

    def functional(bundle: PathBundle) -> np.ndarray:
        ch, traj, gam = simulate_characteristics(spec, Q, x, t, bundle, record=True)
        val = np.asarray(u0(ch.X.T), dtype=float) * ch.gamma
        if spec.has_forcing or spec.has_noise_forcing:
            q = np.asarray(Q.q[: spec.K])
            for j in range(J):
                s = t - j * dt
                pts = traj[:, j, :].T
                if spec.has_forcing:
                    val += spec.f(s, pts) * gam[:, j] * dt
                if spec.has_noise_forcing:
                    g = spec.g(s, pts)  # (K, S)
                    val += np.einsum("k,kp,pk->p", q, g, bundle.dw[:, J - 1 - j, :]) * gam[:, j]
        return val

    if not nested:
        est = functional(outer)
        return EstimatorResult(est, np.zeros(S), max(S, 2), outer.seed)
    est = np.empty(S)
    se = np.empty(S)
    sd = math.sqrt(dt)
    for s in range(S):
        rng = path_rng(seed, s)
        dwt = sd * rng.standard_normal((n_inner, outer.tgrid.M, spec.d))
        inner = PathBundle(outer.tgrid, np.repeat(outer.dw[s : s + 1], n_inner, axis=0), dwt, seed)
        vals = functional(inner)
        est[s] = vals.mean()
        se[s] = vals.std(ddof=1) / math.sqrt(n_inner)
    return EstimatorResult(est, se, max(S, 2), seed)


# ---------------------------------------------------------------------------
# Pathwise check in the degenerate class


@dataclass(frozen=True)
class KVReport:
    t: float
    discrepancies: np.ndarray  # relative L2 per sample

    @property
    def median(self) -> float:
        return float(np.median(self.discrepancies))

    @property
    def mean(self) -> float:
        return float(np.mean(self.discrepancies))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("sample,relative_l2_discrepancy\n")
            for s, v in enumerate(self.discrepancies):
                fh.write(f"{s},{v:.17g}\n")

    def as_dict(self) -> dict:
        d = self.discrepancies
        return {"t": self.t, "samples": int(d.size), "median": self.median, "mean": self.mean,
                "max": float(d.max()), "min": float(d.min())}


def check_kv_class(spec: OperatorSpec, grid: SpatialGrid, tol: float = 1e-12) -> None:
    """Raise unless ``a = 1/2 sigma sigma^T`` and ``c = nu = f = g = 0``."""
    x = grid.points
    sig = spec.sigma_values(0.0, x)
    gap = spec.a(0.0, x) - 0.5 * np.einsum("ikp,jkp->ijp", sig, sig)
    if np.abs(gap).max() > tol:
        raise UnsupportedSpec(f"diffusion differs from sigma sigma^T / 2 by {np.abs(gap).max():.3g}")
    if np.abs(spec.c(0.0, x)).max() > 0 or np.abs(spec.nu(0.0, x)).max() > 0:
        raise UnsupportedSpec("potential terms must vanish")
    if spec.has_forcing or spec.has_noise_forcing:
        raise UnsupportedSpec("forcing terms must vanish")
    if np.abs(spec.b(0.0, x)).max() > 0:
        raise UnsupportedSpec("drift must vanish")
    if not spec.time_homogeneous:
        raise UnsupportedSpec("coefficients must be time independent")


def kv_pathwise_check(sol: ChaosSolution, spec: OperatorSpec, samples: np.ndarray, t: float,
                      u0: Callable[[np.ndarray], np.ndarray] | None = None) -> KVReport:
    """Chaos evaluation against ``u0(X_{t,x}(0))`` on the path rebuilt from the same sample.

    Characteristics start from every grid point and use the increments of the
    reconstructed path on the solution's time grid; ``u0`` defaults to the
    trigonometric interpolant of the stored initial field.
    """
    from .chaos_field import evaluate_samples

    grid = sol.grid
    check_kv_class(spec, grid)
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2:
        samples = samples[None]
    if u0 is None:
        init = sol.coefficients[0, 0]
        u0 = lambda pts: fourier_interpolate(grid, init, pts)  # noqa: E731
    chaos = evaluate_samples(sol, samples, t)
    bundle = bundle_from_samples(samples, sol.basis, sol.tgrid)
    J = sol.tgrid.node(t)
    ones = WeightSequence.ones(spec.K)
    x = grid.points
    out = np.empty(samples.shape[0])
    for s in range(samples.shape[0]):
        # one path, started from every grid point; reversed increments as in simulate_characteristics
        X = x.T.copy()
        for j in range(J):
            sig = spec.sigma_values(t - j * sol.tgrid.dt, X.T)
            X = X + np.einsum("ikp,k->pi", sig, bundle.dw[s, J - 1 - j, :])
        ref = np.asarray(u0(X.T), dtype=float)
        out[s] = math.sqrt(float(grid.norm2(chaos[s] - ref) / grid.norm2(ref)))
    return KVReport(float(t), out)


# ---------------------------------------------------------------------------
# Closed forms and quadratures


def exact_fourier_mode(a: float, sigma: float, kappa: float, t, L: float = 2 * math.pi):
    """Mean amplitude and spatial integral of ``E u^2`` for ``u0 = sin(kappa x)``.

    For ``du = a^2 u_xx dt + sigma u_x dw`` the complex mode is a geometric
    Brownian motion with drift ``-a^2 kappa^2`` and volatility ``i kappa sigma``.
    """
    t = np.asarray(t, dtype=float)
    mean = np.exp(-(a**2) * kappa**2 * t)
    second = 0.5 * L * np.exp((sigma**2 - 2 * a**2) * kappa**2 * t)
    return (float(mean), float(second)) if t.ndim == 0 else (mean, second)


def semigroup_images(stepper: ThetaStepper, fields: np.ndarray, m_end: int) -> np.ndarray:
    """``P_{t_m, t_j} fields[j]`` for j = 0..m_end, by the same stepper with no source."""
    out = np.asarray(fields[: m_end + 1], dtype=float).copy()
    dt = stepper.dt
    for m in range(m_end):
        # rows j <= m have reached t_{m}; advance them to t_{m+1}
        out[: m + 1] = stepper.step(out[: m + 1], m * dt)
    return out


def _simpson_nodes(values: np.ndarray, dt: float) -> np.ndarray:
    return simpson(values, dx=dt, axis=0)


def order_one_quadrature(sol: ChaosSolution, t: float) -> np.ndarray:
    """``u_(ik)(t) = int_0^t P_{t,s} (M_k u_(0)(s) + g_k(s)) m_i(s) ds`` by Simpson's rule.

    Needs the zero-order trajectory at every node up to ``t``; returns (I, K, npts).
    """
    spec, grid, tg = sol.spec, sol.grid, sol.tgrid
    m_end = tg.node(t)
    nodes = np.arange(m_end + 1)
    if not np.all(np.isin(nodes, sol.stored_nodes)):
        raise ValueError("zero-order coefficient must be stored at every node up to t")
    u_zero = sol.coefficients[np.searchsorted(sol.stored_nodes, nodes), 0]
    times = tg.nodes[: m_end + 1]
    x = grid.points
    stepper = ThetaStepper(lambda s: assemble_A(spec, grid, s), tg.dt, sol.theta, spec.time_homogeneous)
    I, K = sol.index_set.I, sol.index_set.K
    mvals = sol.basis.values(times)[:I]  # (I, m_end + 1)
    out = np.empty((I, K, grid.size))
    for k in range(1, K + 1):
        F = np.stack([assemble_M(spec, grid, k, s).matrix @ u_zero[j] for j, s in enumerate(times)])
        if spec.has_noise_forcing:
            F += np.stack([spec.g(s, x)[k - 1] for s in times])
        P = semigroup_images(stepper, F, m_end)
        for i in range(I):
            out[i, k - 1] = _simpson_nodes(P * mvals[i][:, None], tg.dt)
    return out


def energy_equality_rhs(sol: ChaosSolution, Q: WeightSequence, t: float) -> float:
    """``sum_k int_0^t |P_{t,s} (q_k M_k u_(0)(s) + q_k g_k(s))|^2 ds`` by Simpson's rule."""
    spec, grid, tg = sol.spec, sol.grid, sol.tgrid
    m_end = tg.node(t)
    u_zero = sol.coefficients[np.searchsorted(sol.stored_nodes, np.arange(m_end + 1)), 0]
    times = tg.nodes[: m_end + 1]
    x = grid.points
    stepper = ThetaStepper(lambda s: assemble_A(spec, grid, s), tg.dt, sol.theta, spec.time_homogeneous)
    total = 0.0
    for k in range(1, spec.K + 1):
        qk = Q.q[k - 1]
        F = np.stack([qk * (assemble_M(spec, grid, k, s).matrix @ u_zero[j]) for j, s in enumerate(times)])
        if spec.has_noise_forcing:
            F += np.stack([qk * spec.g(s, x)[k - 1] for s in times])
        P = semigroup_images(stepper, F, m_end)
        total += float(_simpson_nodes(grid.norm2(P), tg.dt))
    return total


def probe_indices(grid: SpatialGrid, count: int) -> np.ndarray:
    """``count`` evenly spaced flat grid indices."""
    return np.linspace(0, grid.size, count, endpoint=False).astype(np.int64)


def ks_normal(samples: np.ndarray, loc: float, scale: float):
    """Kolmogorov-Smirnov test against N(loc, scale^2); returns (statistic, p-value)."""
    from scipy.stats import kstest

    res = kstest(np.asarray(samples, dtype=float), "norm", args=(loc, scale))
    return float(res.statistic), float(res.pvalue)

