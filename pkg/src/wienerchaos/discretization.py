"""Periodic finite-difference discretization of the drift and noise operators.

Operators act on grid functions flattened in C order. All inner products and
norms are Delta-x weighted, so a grid function approximates an element of
L2 of the periodic box.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .multiindex import WeightSequence

DEFAULT_MAX_POINTS = 1 << 20

Coefficient = Union[float, Sequence, np.ndarray, Callable]


class LinearSolveError(RuntimeError):
    """The implicit step produced a non-finite or inaccurate solution."""


class DegenerateParabolicity(ValueError):
    """No weight sequence gives a strictly positive parabolicity margin."""


# ---------------------------------------------------------------------------
# Grid


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on ``[0, L_1) x ... x [0, L_d)``."""

    L: tuple[float, ...]
    n: tuple[int, ...]
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self) -> None:
        L = tuple(float(v) for v in np.atleast_1d(self.L))
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "n", n)
        if len(L) != len(n) or len(n) not in (1, 2):
            raise ValueError("grid dimension must be 1 or 2 with matching L and n")
        if any(v < 4 for v in n):
            raise ValueError(f"need at least 4 points per axis, got {n}")
        if any(not (v > 0) for v in L):
            raise ValueError("domain lengths must be positive")
        if math.prod(n) > self.max_points:
            raise ValueError(f"{math.prod(n)} grid points exceed the cap of {self.max_points}")

    @classmethod
    def uniform(cls, d: int, L: float, n: int, **kw) -> SpatialGrid:
        return cls((L,) * d, (n,) * d, **kw)

    @property
    def d(self) -> int:
        return len(self.n)

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.L, self.n))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return math.prod(self.n)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.dx)

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.arange(n) * h for n, h in zip(self.n, self.dx))

    @cached_property
    def points(self) -> np.ndarray:
        """Coordinates of shape (d, size), C order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh])

    def staggered(self, axis: int) -> np.ndarray:
        """Points shifted by half a cell along ``axis``."""
        pts = self.points.copy()
        pts[axis] += 0.5 * self.dx[axis]
        return pts

    def inner(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Delta-x weighted inner product over the last axis."""
        return self.cell_volume * np.sum(u * v, axis=-1)

    def norm2(self, u: np.ndarray) -> np.ndarray:
        """Squared discrete L2 norm over the last axis."""
        return self.cell_volume * np.sum(u * u, axis=-1)

    def h1_norm2(self, u: np.ndarray) -> np.ndarray:
        """Squared discrete H1 norm (forward differences)."""
        out = self.norm2(u)
        for axis in range(self.d):
            out = out + self.norm2(forward_difference(self, axis) @ u)
        return out

    def integral(self, u: np.ndarray) -> np.ndarray:
        return self.cell_volume * np.sum(u, axis=-1)

    def evaluate(self, func: Callable[..., np.ndarray]) -> np.ndarray:
        """Sample ``func(*coords)`` on the flattened grid."""
        return np.broadcast_to(np.asarray(func(*self.points), dtype=float), (self.size,)).copy()


def _shift_1d(n: int, offset: int) -> sp.csr_matrix:
    """(S u)_j = u_{j + offset} with periodic wrap."""
    rows = np.arange(n)
    return sp.csr_matrix((np.ones(n), (rows, (rows + offset) % n)), shape=(n, n))


def _axis_operator(grid: SpatialGrid, axis: int, op1d: sp.spmatrix) -> sp.csr_matrix:
    mats = [sp.identity(m, format="csr") for m in grid.n]
    mats[axis] = op1d
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out.tocsr()


def central_difference(grid: SpatialGrid, axis: int) -> sp.csr_matrix:
    n, h = grid.n[axis], grid.dx[axis]
    return _axis_operator(grid, axis, (_shift_1d(n, 1) - _shift_1d(n, -1)) / (2 * h))


def forward_difference(grid: SpatialGrid, axis: int) -> sp.csr_matrix:
    n, h = grid.n[axis], grid.dx[axis]
    return _axis_operator(grid, axis, (_shift_1d(n, 1) - sp.identity(n)) / h)


def second_difference(grid: SpatialGrid, axis: int) -> sp.csr_matrix:
    n, h = grid.n[axis], grid.dx[axis]
    return _axis_operator(grid, axis, (_shift_1d(n, 1) - 2 * sp.identity(n) + _shift_1d(n, -1)) / h**2)


# ---------------------------------------------------------------------------
# Coefficients


def _coef_values(coef: Coefficient | None, t: float, x: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Evaluate a constant or ``coef(t, x)`` to an array of shape ``shape + (npts,)``."""
    npts = x.shape[1]
    if coef is None:
        return np.zeros(shape + (npts,))
    raw = coef(t, x) if callable(coef) else coef
    arr = np.asarray(raw, dtype=float)
    if arr.shape == shape:
        arr = arr[..., None]
    try:
        out = np.broadcast_to(arr, shape + (npts,)).copy()
    except ValueError as exc:
        raise ValueError(f"coefficient of shape {arr.shape} does not fit {shape} x {npts} points") from exc
    if not np.all(np.isfinite(out)):
        raise ValueError(f"non-finite coefficient values at t={t}")
    return out


@dataclass(frozen=True)
class OperatorSpec:
    """Coefficients of ``du = (A u + f) dt + (M_k u + g_k) dw_k``.

    ``A = a_ij D_i D_j + b_i D_i + c`` (nondivergence) or
    ``A = D_i(a_ij D_j) + b_i D_i + c`` (divergence), ``M_k = sigma_ik D_i + nu_k``.
    Each coefficient is a constant of the right shape or a callable
    ``(t, x) -> array`` where ``x`` has shape (d, npts).
    """

    d: int
    K: int
    diffusion: Coefficient = 0.0  # (d, d)
    drift: Coefficient = 0.0  # (d,)
    potential: Coefficient = 0.0  # scalar
    sigma: Coefficient = 0.0  # (d, K)
    noise_potential: Coefficient = 0.0  # (K,)
    forcing: Coefficient | None = None  # scalar field f
    noise_forcing: Coefficient | None = None  # (K,) fields g_k
    form: str = "nondivergence"
    time_homogeneous: bool = True
    viscosity: float | None = None

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ValueError("only d = 1 or 2 is supported")
        if self.K < 1:
            raise ValueError("need at least one noise channel")
        if self.form not in ("divergence", "nondivergence"):
            raise ValueError(f"unknown operator form {self.form!r}")

    # evaluated coefficient arrays, each with a trailing point axis
    def a(self, t: float, x: np.ndarray) -> np.ndarray:
        coef = self.diffusion
        if not callable(coef) and np.ndim(coef) == 0:
            coef = float(coef) * np.eye(self.d)
        out = _coef_values(coef, t, x, (self.d, self.d))
        if not np.allclose(out, np.swapaxes(out, 0, 1), rtol=1e-12, atol=1e-14):
            raise ValueError("diffusion matrix must be symmetric")
        return out

    def b(self, t: float, x: np.ndarray) -> np.ndarray:
        return _coef_values(self.drift, t, x, (self.d,))

    def c(self, t: float, x: np.ndarray) -> np.ndarray:
        return _coef_values(self.potential, t, x, ())

    def sigma_values(self, t: float, x: np.ndarray) -> np.ndarray:
        return _coef_values(self.sigma, t, x, (self.d, self.K))

    def nu(self, t: float, x: np.ndarray) -> np.ndarray:
        return _coef_values(self.noise_potential, t, x, (self.K,))

    def f(self, t: float, x: np.ndarray) -> np.ndarray:
        return _coef_values(self.forcing, t, x, ())

    def g(self, t: float, x: np.ndarray) -> np.ndarray:
        return _coef_values(self.noise_forcing, t, x, (self.K,))

    @property
    def has_forcing(self) -> bool:
        return self.forcing is not None

    @property
    def has_noise_forcing(self) -> bool:
        return self.noise_forcing is not None

    def scaled_noise(self, Q: WeightSequence) -> OperatorSpec:
        """Spec with ``M_k -> q_k M_k`` and ``g_k -> q_k g_k``."""
        q = np.asarray(Q.q[: self.K], dtype=float)
        if q.size != self.K:
            raise ValueError("weight sequence shorter than channel count")
        sig, nu, g = self.sigma, self.noise_potential, self.noise_forcing

        def scale(coef, axis_shape):
            if coef is None:
                return None
            if callable(coef):
                return lambda t, x: _coef_values(coef, t, x, axis_shape) * q.reshape((1,) * (len(axis_shape) - 1) + (-1, 1))
            arr = np.broadcast_to(np.asarray(coef, dtype=float), axis_shape)
            return arr * q.reshape((1,) * (len(axis_shape) - 1) + (-1,))

        return replace(self, sigma=scale(sig, (self.d, self.K)), noise_potential=scale(nu, (self.K,)),
                       noise_forcing=scale(g, (self.K,)))

    def without_noise(self) -> OperatorSpec:
        return replace(self, sigma=0.0, noise_potential=0.0, noise_forcing=None)


@dataclass(frozen=True)
class DiscreteOperator:
    """Sparse matrix acting on flattened grid functions."""

    matrix: sp.csr_matrix
    form: str
    t: float

    def __call__(self, u: np.ndarray) -> np.ndarray:
        """Apply to a field (npts,) or to a stack of fields (m, npts)."""
        u = np.asarray(u)
        if u.ndim == 1:
            return self.matrix @ u
        return np.asarray((self.matrix @ u.T).T)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


def _diag(values: np.ndarray) -> sp.dia_matrix:
    return sp.diags(values, 0, format="csr")


def assemble_A(spec: OperatorSpec, grid: SpatialGrid, t: float, form: str | None = None) -> DiscreteOperator:
    """Second-order central discretization of the drift operator A(t)."""
    form = form or spec.form
    if grid.d != spec.d:
        raise ValueError(f"spec dimension {spec.d} does not match grid dimension {grid.d}")
    x = grid.points
    a = spec.a(t, x)
    b = spec.b(t, x)
    D = [central_difference(grid, i) for i in range(grid.d)]
    out = _diag(spec.c(t, x))
    for i in range(grid.d):
        out = out + _diag(b[i]) @ D[i]
    if form == "nondivergence":
        for i in range(grid.d):
            out = out + _diag(a[i, i]) @ second_difference(grid, i)
            for j in range(grid.d):
                if j != i:
                    out = out + _diag(a[i, j]) @ (D[i] @ D[j])
    elif form == "divergence":
        for i in range(grid.d):
            # flux a_ii D_i^+ u lives on the half-cell points x + dx_i/2
            a_half = spec.a(t, grid.staggered(i))[i, i]
            fwd = forward_difference(grid, i)
            bwd = _axis_operator(grid, i, (sp.identity(grid.n[i]) - _shift_1d(grid.n[i], -1)) / grid.dx[i])
            out = out + bwd @ _diag(a_half) @ fwd
            for j in range(grid.d):
                if j != i:
                    out = out + D[i] @ _diag(a[i, j]) @ D[j]
    else:
        raise ValueError(f"unknown operator form {form!r}")
    return DiscreteOperator(sp.csr_matrix(out), form, float(t))


def assemble_M(spec: OperatorSpec, grid: SpatialGrid, k: int, t: float) -> DiscreteOperator:
    """Noise operator ``M_k = sigma_ik D_i + nu_k`` (k is 1-based)."""
    if not 1 <= k <= spec.K:
        raise IndexError(f"channel {k} outside 1..{spec.K}")
    x = grid.points
    sig = spec.sigma_values(t, x)
    out = _diag(spec.nu(t, x)[k - 1])
    for i in range(grid.d):
        out = out + _diag(sig[i, k - 1]) @ central_difference(grid, i)
    return DiscreteOperator(sp.csr_matrix(out), "first-order", float(t))


# ---------------------------------------------------------------------------
# Time stepping


class ThetaStepper:
    """theta-scheme for ``du/dt = A(t) u + s(t)`` with cached factorizations.

    One step solves
    ``(I - theta dt A(t+dt)) u' = (I + (1-theta) dt A(t)) u + dt ((1-theta) s(t) + theta s(t+dt))``.
    The source is averaged at the step endpoints with the same weights as the
    operator, which makes the scheme commute with splitting the source into
    separately propagated parts.
    """

    def __init__(self, operator: DiscreteOperator | Callable[[float], DiscreteOperator], dt: float,
                 theta: float = 0.5, time_homogeneous: bool | None = None):
        if not dt > 0:
            raise ValueError("time step must be positive")
        if not 0.0 <= theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        self.dt = float(dt)
        self.theta = float(theta)
        if isinstance(operator, DiscreteOperator):
            self._provider = lambda t, _op=operator: _op
            self.time_homogeneous = True
        else:
            self._provider = operator
            self.time_homogeneous = bool(time_homogeneous)
        self._cache: dict[float, tuple[sp.csr_matrix, object]] = {}
        self._explicit_cache: dict[tuple, sp.csr_matrix] = {}

    def _explicit(self, t: float) -> sp.csr_matrix:
        key = ("explicit", 0.0 if self.time_homogeneous else t)
        hit = self._explicit_cache.get(key)
        if hit is None:
            A = self._provider(t).matrix
            hit = (sp.identity(A.shape[0], format="csr") + (1.0 - self.theta) * self.dt * A).tocsr()
            if not self.time_homogeneous:
                self._explicit_cache.clear()
            self._explicit_cache[key] = hit
        return hit

    def _implicit(self, t_next: float):
        key = 0.0 if self.time_homogeneous else t_next
        hit = self._cache.get(key)
        if hit is None:
            A = self._provider(t_next).matrix
            lhs = (sp.identity(A.shape[0], format="csc") - self.theta * self.dt * A).tocsc()
            hit = (lhs, spla.splu(lhs))
            if not self.time_homogeneous:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    def step(self, u: np.ndarray, t: float, source_now: np.ndarray | None = None,
             source_next: np.ndarray | None = None, check_residual: bool = False) -> np.ndarray:
        """Advance fields ``u`` of shape (npts,) or (m, npts) from t to t + dt."""
        u = np.asarray(u, dtype=float)
        stacked = u.ndim == 2
        cols = u.T if stacked else u
        if self.theta < 1.0:
            rhs = self._explicit(t) @ cols
        else:
            rhs = cols.copy()
        if source_now is not None and self.theta < 1.0:
            s = np.asarray(source_now, dtype=float)
            rhs = rhs + (1.0 - self.theta) * self.dt * (s.T if stacked else s)
        if source_next is not None and self.theta > 0.0:
            s = np.asarray(source_next, dtype=float)
            rhs = rhs + self.theta * self.dt * (s.T if stacked else s)
        lhs, lu = self._implicit(t + self.dt)
        new = lu.solve(np.asfortranarray(rhs))
        if not np.all(np.isfinite(new)):
            raise LinearSolveError(f"non-finite solution after step from t={t}")
        if check_residual:
            scale = max(float(np.max(np.abs(rhs))), 1e-300)
            resid = float(np.max(np.abs(lhs @ new - rhs))) / scale
            if resid > 1e-10:
                raise LinearSolveError(f"relative residual {resid:.3e} exceeds 1e-10 at t={t}")
        return np.ascontiguousarray(new.T) if stacked else new


def step(A, source, u: np.ndarray, t: float, dt: float, theta: float = 0.5) -> np.ndarray:
    """Single theta-scheme step; ``A`` is an operator or ``t -> operator``,
    ``source`` is None or ``t -> field``."""
    stepper = ThetaStepper(A, dt, theta, time_homogeneous=isinstance(A, DiscreteOperator))
    s0 = s1 = None
    if source is not None:
        s0, s1 = source(t), source(t + dt)
    return stepper.step(u, t, s0, s1, check_residual=True)


# ---------------------------------------------------------------------------
# Parabolicity


@dataclass(frozen=True)
class Classification:
    """Outcome of the symbol check ``2a - sum_k q_k^2 sigma_k sigma_k^T``."""

    kind: str  # "strong", "weak" or "none"
    margin: float  # minimal eigenvalue over the sampled points
    worst_time: float
    worst_point: tuple[float, ...]
    samples: int = field(default=0)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "margin": self.margin, "worst_time": self.worst_time,
                "worst_point": list(self.worst_point), "samples": self.samples}


def _default_times(spec: OperatorSpec, T: float, count: int = 5) -> np.ndarray:
    return np.array([0.0]) if spec.time_homogeneous else np.linspace(0.0, T, count)


def symbol_matrix(spec: OperatorSpec, Q: WeightSequence, t: float, x: np.ndarray) -> np.ndarray:
    """``S(t, x) = 2 a - sum_k q_k^2 sigma_k sigma_k^T`` of shape (npts, d, d)."""
    q2 = np.asarray(Q.q[: spec.K]) ** 2
    a = spec.a(t, x)
    sig = spec.sigma_values(t, x)
    S = 2.0 * a - np.einsum("k,ikp,jkp->ijp", q2, sig, sig)
    return np.moveaxis(S, -1, 0)


def parabolicity_classify(spec: OperatorSpec, Q: WeightSequence, grid: SpatialGrid,
                          times: Sequence[float] | None = None, T: float = 1.0,
                          tol: float = 1e-10) -> Classification:
    """Sign of the weighted symbol over all grid points and sampled times.

    A finite-sample necessary-condition check: ``strong`` when the minimal
    eigenvalue exceeds ``tol``, ``weak`` within ``[-tol, tol]``, else ``none``.
    """
    if len(Q) < spec.K:
        raise ValueError("weight sequence shorter than channel count")
    times = _default_times(spec, T) if times is None else np.asarray(times, dtype=float)
    worst = (math.inf, 0.0, 0)
    for t in times:
        eig = np.linalg.eigvalsh(symbol_matrix(spec, Q, float(t), grid.points))[:, 0]
        p = int(np.argmin(eig))
        if eig[p] < worst[0]:
            worst = (float(eig[p]), float(t), p)
    margin, t_w, p_w = worst
    kind = "strong" if margin > tol else ("weak" if margin >= -tol else "none")
    return Classification(kind, margin, t_w, tuple(float(v) for v in grid.points[:, p_w]),
                          samples=len(times) * grid.size)


def coercivity_constant(spec: OperatorSpec, Q: WeightSequence, grid: SpatialGrid,
                        times: Sequence[float] | None = None, T: float = 1.0) -> float:
    """Smallest C with ``2<A v, v> + sum q_k^2 |M_k v|^2 <= C |v|^2`` for the discrete operators."""
    times = _default_times(spec, T) if times is None else np.asarray(times, dtype=float)
    q2 = np.asarray(Q.q[: spec.K]) ** 2
    best = -math.inf
    for t in times:
        A = assemble_A(spec, grid, float(t)).matrix
        form = A + A.T
        for k in range(1, spec.K + 1):
            Mk = assemble_M(spec, grid, k, float(t)).matrix
            form = form + q2[k - 1] * (Mk.T @ Mk)
        if grid.size <= 4096:
            lam = scipy.linalg.eigvalsh(form.toarray(), subset_by_index=[grid.size - 1, grid.size - 1])[0]
        else:
            lam = spla.eigsh(form.tocsc(), k=1, which="LA", return_eigenvectors=False)[0]
        best = max(best, float(lam))
    return best


def suggest_weights(spec: OperatorSpec, epsilon: float, grid: SpatialGrid,
                    times: Sequence[float] | None = None, T: float = 1.0,
                    rule: str = "auto") -> WeightSequence:
    """Weights that make the symbol strictly positive.

    ``epsilon`` in (0, 1) is the fraction of the admissible range used. With
    ``nu`` the viscosity (or the smallest eigenvalue of ``a``) and
    ``C_k = max_i sup |sigma_ik|``:

    * per-channel rule: ``q_k = sqrt(delta nu) / (d 2^k C_k)`` with ``delta = 2 epsilon``;
    * uniform rule: ``q_k = epsilon sqrt(2 nu / (C_sigma d))`` where ``C_sigma``
      bounds the entries of ``sum_k sigma_k sigma_k^T``.

    ``auto`` picks per-channel when the ``C_k`` differ, uniform otherwise.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    times = _default_times(spec, T) if times is None else np.asarray(times, dtype=float)
    x = grid.points
    if spec.viscosity is not None:
        nu = float(spec.viscosity)
    else:
        nu = min(float(np.linalg.eigvalsh(np.moveaxis(spec.a(float(t), x), -1, 0))[:, 0].min()) for t in times)
    if not nu > 0:
        raise DegenerateParabolicity(f"no positive diffusion (nu = {nu}); weights cannot restore parabolicity")
    sig = np.stack([spec.sigma_values(float(t), x) for t in times])  # (nt, d, K, npts)
    C_k = np.abs(sig).max(axis=(0, 1, 3))
    d = spec.d
    if rule == "auto":
        live = C_k[C_k > 0]
        rule = "per-channel" if live.size and not np.allclose(live, live[0], rtol=1e-12) else "uniform"
    if rule == "per-channel":
        safe = np.where(C_k > 0, C_k, 1.0)
        q = np.sqrt(2.0 * epsilon * nu) / (d * 2.0 ** np.arange(1, spec.K + 1) * safe)
        q = np.where(C_k > 0, q, 1.0)
    elif rule == "uniform":
        C_sigma = float(np.abs(np.einsum("tikp,tjkp->tijp", sig, sig)).max())
        value = epsilon * math.sqrt(2.0 * nu / (C_sigma * d)) if C_sigma > 0 else 1.0
        q = np.full(spec.K, value)
    else:
        raise ValueError(f"unknown weight rule {rule!r}")
    Q = WeightSequence(tuple(float(v) for v in q))
    verdict = parabolicity_classify(spec, Q, grid, times)
    if verdict.kind != "strong":
        raise DegenerateParabolicity(f"suggested weights {Q.q} leave the symbol {verdict.kind}")
    return Q


# ---------------------------------------------------------------------------
# Field utilities


def fourier_interpolate(grid: SpatialGrid, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of periodic grid data at arbitrary points (d, P)."""
    coef = np.fft.fftn(np.asarray(values, dtype=float).reshape(grid.shape)) / grid.size
    points = np.atleast_2d(np.asarray(points, dtype=float))
    phases = []
    for axis, n in enumerate(grid.n):
        freqs = np.fft.fftfreq(n, d=1.0 / n)
        if n % 2 == 0:
            # split the Nyquist mode between +-n/2 so the interpolant is real
            nyq = np.take(coef, [n // 2], axis=axis) * 0.5
            coef = np.concatenate([coef, nyq], axis=axis)
            idx = [slice(None)] * grid.d
            idx[axis] = n // 2
            coef[tuple(idx)] *= 0.5
            freqs = np.append(freqs, n // 2)
        phases.append(np.exp(2j * np.pi * np.outer(points[axis], freqs) / grid.L[axis]))
    if grid.d == 1:
        out = phases[0] @ coef
    else:
        out = np.einsum("pa,ab,pb->p", phases[0], coef, phases[1])
    return out.real


def write_field_csv(path, grid: SpatialGrid, columns: dict[str, np.ndarray]) -> None:
    """One row per grid point: coordinates then each named column, 17 significant digits."""
    names = [f"x{i + 1}" for i in range(grid.d)] + list(columns)
    data = np.vstack([grid.points] + [np.asarray(v, dtype=float).reshape(1, -1) for v in columns.values()])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in data.T:
            w.writerow([f"{v:.17g}" for v in row])


def read_field_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
