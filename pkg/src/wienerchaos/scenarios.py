"""Turn a validated configuration into solver inputs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import ScenarioConfig
from .discretization import OperatorSpec, SpatialGrid, suggest_weights
from .multiindex import MultiIndexSet, WeightSequence, enumerate_indices
from .propagator import TimeGrid
from .stochastic_basis import CosineBasis, TestFunctionH


@dataclass(frozen=True)
class Problem:
    config: ScenarioConfig
    spec: OperatorSpec
    grid: SpatialGrid
    tgrid: TimeGrid
    basis: CosineBasis
    index_set: MultiIndexSet
    u0: np.ndarray
    initial: Callable[[np.ndarray], np.ndarray]  # points (d, P) -> values (P,)

    @property
    def t_eval(self) -> float:
        t = self.config.time.t_eval
        return self.tgrid.T if t is None else t

    def test_function(self) -> TestFunctionH:
        return TestFunctionH.from_modes(np.array(self.config.oracle.h_modes), self.basis)

    def weights(self) -> WeightSequence:
        w = self.config.weights
        K = self.spec.K
        if w.mode == "ones":
            return WeightSequence.ones(K)
        if w.mode == "uniform":
            return WeightSequence.uniform(w.value, K)
        if w.mode == "explicit":
            return WeightSequence(tuple(w.q))
        return suggest_weights(self.spec, w.epsilon, self.grid, T=self.tgrid.T)

    def with_truncation(self, N: int) -> Problem:
        tr = self.config.truncation
        return Problem(self.config, self.spec, self.grid, self.tgrid, self.basis,
                       enumerate_indices(tr.I, tr.K, N), self.u0, self.initial)


def _matrix(value, shape: tuple[int, ...]) -> np.ndarray:
    return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()


def initial_function(cfg: ScenarioConfig) -> Callable[[np.ndarray], np.ndarray]:
    ic, L = cfg.initial, cfg.grid.L
    kappa = 2 * np.pi * ic.kappa / L

    def f(points: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if ic.kind == "sin":
            return np.prod(np.sin(kappa * x), axis=0)
        if ic.kind == "cos":
            return np.prod(np.cos(kappa * x), axis=0)
        r = np.mod(x, L) - L / 2  # offset from the domain center
        if ic.kind == "box":
            return np.all(np.abs(r) < ic.width, axis=0).astype(float)
        return np.exp(-0.5 * np.sum(r**2, axis=0) / ic.width**2)

    return f


def build_spec(cfg: ScenarioConfig) -> OperatorSpec:
    eq, d, K = cfg.equation, cfg.grid.d, cfg.truncation.K
    if cfg.scenario == "heat-advection":
        return OperatorSpec(d=1, K=1, diffusion=eq.a**2, sigma=[[float(eq.sigma)]], viscosity=eq.a**2)
    if cfg.scenario == "passive-scalar":
        # transport by the velocity field sigma_k dw_k enters with a minus sign
        velocity = _matrix(eq.sigma, (d, K))
        return OperatorSpec(d=d, K=K, diffusion=eq.nu, sigma=-velocity, viscosity=eq.nu)
    if cfg.scenario == "kv-check":
        sig = _matrix(eq.sigma, (d, K))
        return OperatorSpec(d=d, K=K, diffusion=0.5 * sig @ sig.T, sigma=sig)
    forcing = None if eq.forcing is None else float(eq.forcing)
    noise_forcing = None if eq.noise_forcing is None else _matrix(eq.noise_forcing, (K,))
    return OperatorSpec(d=d, K=K, diffusion=_matrix(eq.diffusion, (d, d)) if np.ndim(eq.diffusion) else float(eq.diffusion),
                        drift=_matrix(eq.drift, (d,)), potential=float(eq.potential),
                        sigma=_matrix(eq.sigma, (d, K)), noise_potential=_matrix(eq.noise_potential, (K,)),
                        forcing=forcing, noise_forcing=noise_forcing, form=eq.form)


def build_problem(cfg: ScenarioConfig) -> Problem:
    grid = SpatialGrid.uniform(cfg.grid.d, cfg.grid.L, cfg.grid.n)
    tgrid = TimeGrid(cfg.time.T, cfg.time.M)
    tr = cfg.truncation
    basis = CosineBasis(cfg.time.T, tr.I)
    initial = initial_function(cfg)
    return Problem(cfg, build_spec(cfg), grid, tgrid, basis, enumerate_indices(tr.I, tr.K, tr.N),
                   initial(grid.points), initial)
