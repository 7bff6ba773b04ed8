import math

import numpy as np
import pytest

from wienerchaos import oracles as orc
from wienerchaos.discretization import OperatorSpec, SpatialGrid
from wienerchaos.multiindex import WeightSequence, enumerate_indices
from wienerchaos.propagator import TimeGrid, solve
from wienerchaos.stochastic_basis import CosineBasis, draw_samples

ONES = WeightSequence.ones(1)


def kv_spec(sigma=1.0):
    return OperatorSpec(d=1, K=1, diffusion=0.5 * sigma**2, sigma=[[sigma]])


def test_paths_depend_only_on_seed_and_index():
    tg = TimeGrid(1.0, 10)
    whole = orc.generate_paths(tg, 2, 5, seed=3)
    tail = orc.generate_paths(tg, 2, 2, seed=3, first=3)
    assert np.array_equal(whole.dw[3:], tail.dw)
    assert whole.paths().shape == (5, 11, 2) and np.all(whole.paths()[:, 0] == 0)
    assert not np.array_equal(whole.dw, orc.generate_paths(tg, 2, 5, seed=4).dw)


def test_bundle_from_samples_reproduces_paths():
    basis, tg = CosineBasis(1.0, 6), TimeGrid(1.0, 20)
    xi = draw_samples(6, 1, 3, seed=0)
    w = orc.bundle_from_samples(xi, basis, tg).paths()
    assert np.allclose(w[:, -1, 0], xi[:, 0, 0])  # only m_1 has nonzero integral over [0, T]


def test_characteristic_endpoint_is_gaussian():
    tg = TimeGrid(0.5, 50)
    ch = orc.simulate_characteristics(kv_spec(), ONES, 1.0, 0.5, orc.generate_paths(tg, 1, 2000, seed=5))
    _, p = orc.ks_normal(ch.X[:, 0], 1.0, math.sqrt(0.5))
    assert p > 0.01
    assert np.all(ch.gamma == 1.0)


def test_characteristic_is_shifted_path():
    tg = TimeGrid(0.5, 50)
    paths = orc.generate_paths(tg, 1, 10, seed=1)
    ch = orc.simulate_characteristics(kv_spec(0.7), ONES, 0.2, 0.5, paths)
    assert np.allclose(ch.X[:, 0], 0.2 + 0.7 * paths.paths()[:, -1, 0])


def test_deterministic_transport():
    spec = OperatorSpec(d=1, K=1, drift=0.7)
    tg = TimeGrid(0.4, 40)
    est = orc.feynman_kac_estimate(spec, ONES, 0.3, 0.4, orc.generate_paths(tg, 1, 3, seed=0), lambda p: np.sin(p[0]))
    assert np.allclose(est.estimate, np.sin(0.3 + 0.7 * 0.4))
    assert np.all(est.stderr == 0)


def test_potential_weight():
    spec = OperatorSpec(d=1, K=1, potential=-2.0)
    tg = TimeGrid(0.5, 10)
    ch = orc.simulate_characteristics(spec, ONES, 0.0, 0.5, orc.generate_paths(tg, 1, 4, seed=0))
    assert np.allclose(ch.gamma, math.exp(-1.0))


def test_measurable_functional_ignores_inner_paths():
    tg = TimeGrid(0.5, 50)
    outer = orc.generate_paths(tg, 1, 4, seed=2)
    a = orc.feynman_kac_estimate(kv_spec(), ONES, 0.0, 0.5, outer, lambda p: np.cos(p[0]), n_inner=1)
    b = orc.feynman_kac_estimate(kv_spec(), ONES, 0.0, 0.5, outer, lambda p: np.cos(p[0]), n_inner=50)
    assert np.array_equal(a.estimate, b.estimate)
    expected = np.cos(outer.paths()[:, -1, 0])
    assert np.allclose(a.estimate, expected)


def test_nested_heat_kernel():
    spec = OperatorSpec(d=1, K=1, diffusion=0.5)  # residual factor sqrt(2 a) = 1
    tg = TimeGrid(0.5, 25)
    outer = orc.generate_paths(tg, 1, 3, seed=0, tilde_channels=1)
    est = orc.feynman_kac_estimate(spec, ONES, 0.4, 0.5, outer, lambda p: np.sin(p[0]), n_inner=4000, seed=9)
    assert np.all(est.within(math.exp(-0.25) * math.sin(0.4)))
    assert np.all(est.stderr > 0)
    with pytest.raises(ValueError):
        orc.feynman_kac_estimate(spec, ONES, 0.4, 0.5, outer, lambda p: np.sin(p[0]), n_inner=1)


def test_residual_factor():
    spec = OperatorSpec(d=2, K=1, diffusion=[[1.0, 0.0], [0.0, 0.5]], sigma=[[1.0], [0.0]])
    x = np.zeros((2, 1))
    r = orc.residual_factor(spec, ONES, 0.0, x)[..., 0]
    assert np.allclose(r @ r.T, [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(orc.UnsupportedSpec):
        orc.residual_factor(spec, WeightSequence((2.0,)), 0.0, x)


def test_forcing_needs_quadrature_rule():
    spec = OperatorSpec(d=1, K=1, forcing=1.0)
    tg = TimeGrid(0.5, 10)
    paths = orc.generate_paths(tg, 1, 2, seed=0)
    with pytest.raises(ValueError):
        orc.feynman_kac_estimate(spec, ONES, 0.0, 0.5, paths, lambda p: 0 * p[0])
    est = orc.feynman_kac_estimate(spec, ONES, 0.0, 0.5, paths, lambda p: 0 * p[0], quadrature="right")
    assert np.allclose(est.estimate, 0.5)


def test_kv_pathwise_with_zero_noise_is_exact():
    grid = SpatialGrid.uniform(1, 2 * np.pi, 32)
    spec = kv_spec(0.0)
    tg, basis = TimeGrid(0.2, 20), CosineBasis(0.2, 4)
    sol = solve(spec, grid, tg, basis, enumerate_indices(4, 1, 2), np.sin(grid.points[0]))
    rep = orc.kv_pathwise_check(sol, spec, draw_samples(4, 1, 3, seed=0), 0.2)
    assert rep.median < 1e-12


def test_kv_class_refusals():
    grid = SpatialGrid.uniform(1, 2 * np.pi, 16)
    for spec in (OperatorSpec(d=1, K=1, diffusion=1.0, sigma=[[1.0]]),
                 OperatorSpec(d=1, K=1, diffusion=0.5, sigma=[[1.0]], potential=-1.0),
                 OperatorSpec(d=1, K=1, diffusion=0.5, sigma=[[1.0]], forcing=1.0),
                 OperatorSpec(d=1, K=1, diffusion=0.5, sigma=[[1.0]], drift=0.1)):
        with pytest.raises(orc.UnsupportedSpec):
            orc.check_kv_class(spec, grid)


def test_exact_fourier_mode():
    assert orc.exact_fourier_mode(1.0, 1.0, 1.0, 0.0) == (1.0, pytest.approx(math.pi))
    mean, second = orc.exact_fourier_mode(1.0, math.sqrt(2.0), 1.0, np.array([0.0, 1.0, 2.0]))
    assert np.allclose(second, math.pi)
    assert np.allclose(mean, np.exp(-np.array([0.0, 1.0, 2.0])))


def test_monte_carlo_refuses_supercritical():
    grid = SpatialGrid.uniform(1, 2 * np.pi, 16)
    spec = OperatorSpec(d=1, K=1, diffusion=1.0, sigma=[[2.0]])
    with pytest.raises(orc.SupercriticalConfiguration):
        orc.mc_spde(spec, grid, TimeGrid(0.1, 10), np.sin(grid.points[0]), 10, seed=0)


def test_monte_carlo_is_thread_independent():
    grid = SpatialGrid.uniform(1, 2 * np.pi, 16)
    spec = OperatorSpec(d=1, K=1, diffusion=1.0, sigma=[[1.0]])
    args = (spec, grid, TimeGrid(0.2, 20), np.sin(grid.points[0]), 600)
    a = orc.mc_spde(*args, seed=1, threads=1)
    b = orc.mc_spde(*args, seed=1, threads=3)
    assert np.array_equal(a.mean.estimate, b.mean.estimate)
    assert np.array_equal(a.second_moment.stderr, b.second_moment.stderr)
    c = orc.mc_spde(*args, seed=2, threads=1)
    assert not np.array_equal(a.mean.estimate, c.mean.estimate)


def test_chunked_moments_match_numpy():
    rng = np.random.default_rng(0)
    data = rng.standard_normal((700, 3))
    acc = orc._Moments.of(data[:250])
    acc.merge(orc._Moments.of(data[250:]))
    res = acc.result(0)
    assert np.allclose(res.estimate, data.mean(axis=0))
    assert np.allclose(res.stderr, data.std(axis=0, ddof=1) / math.sqrt(700))


def test_estimator_and_threads(monkeypatch):
    with pytest.raises(ValueError):
        orc.EstimatorResult(np.zeros(1), np.zeros(1), 1, 0)
    monkeypatch.setenv("WIENERCHAOS_THREADS", "4")
    assert orc.default_threads() == 4
    monkeypatch.setenv("WIENERCHAOS_THREADS", "0")
    with pytest.raises(ValueError):
        orc.default_threads()


def test_probe_indices():
    grid = SpatialGrid.uniform(1, 1.0, 128)
    assert list(orc.probe_indices(grid, 4)) == [0, 32, 64, 96]


def test_monte_carlo_without_noise_is_deterministic():
    from wienerchaos.discretization import ThetaStepper, assemble_A

    grid = SpatialGrid.uniform(1, 2 * np.pi, 16)
    spec = OperatorSpec(d=1, K=1, diffusion=1.0)
    tg = TimeGrid(0.2, 20)
    u0 = np.sin(grid.points[0])
    res = orc.mc_spde(spec, grid, tg, u0, 300, seed=0)
    stepper = ThetaStepper(assemble_A(spec, grid, 0.0), tg.dt, theta=1.0)
    u = u0.copy()
    for m in range(tg.M):
        u = stepper.step(u, tg.nodes[m])
    assert np.max(np.abs(res.mean.estimate - u)) < 1e-12
    assert np.all(res.mean.stderr == 0) and np.all(res.second_moment.stderr == 0)
