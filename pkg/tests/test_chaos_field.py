import numpy as np
import pytest

from wienerchaos import chaos_field as cf
from wienerchaos.multiindex import WeightSequence
from wienerchaos.oracles import exact_fourier_mode
from wienerchaos.stochastic_basis import GaussianSample, TestFunctionH, draw_samples, wick_exponential


def test_moments_match_closed_form(ref_solution):
    sol = ref_solution
    mean, second = exact_fourier_mode(1.0, 1.0, 1.0, 0.5)
    x = sol.grid.points[0]
    assert np.max(np.abs(cf.mean_field(sol, 0.5) - mean * np.sin(x))) < 1e-3
    rel = abs(sol.grid.integral(cf.second_moment_field(sol, 0.5)) - second) / second
    assert rel < 1e-2
    rep = cf.moments(sol, 0.5)
    assert np.all(rep.variance >= 0) and rep.size == len(sol.index_set)


def test_sampling_agrees_with_parseval(ref_solution):
    sol = ref_solution
    xi = draw_samples(8, 1, 20_000, seed=7)
    u = cf.evaluate_samples(sol, xi, 0.5)[:, ::8]
    n = u.shape[0]
    mean_se = u.std(axis=0, ddof=1) / np.sqrt(n)
    sq_se = (u**2).std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(u.mean(axis=0) - cf.mean_field(sol, 0.5)[::8]) <= 3 * mean_se + 1e-12)
    assert np.all(np.abs((u**2).mean(axis=0) - cf.second_moment_field(sol, 0.5)[::8]) <= 3 * sq_se + 1e-12)


def test_weighted_norm(ref_solution):
    sol = ref_solution
    plain = cf.weighted_norm(sol, None, 0.5)
    assert plain**2 == pytest.approx(sol.grid.norm2(sol.at(0.5)).sum())
    assert cf.weighted_norm(sol, WeightSequence((0.5,)), 0.5) < plain


def test_evaluate_sample_checks_dimensions(ref_solution):
    with pytest.raises(ValueError):
        cf.evaluate_sample(ref_solution, GaussianSample(np.zeros((3, 1))), 0.5)
    zero = cf.evaluate_sample(ref_solution, GaussianSample(np.zeros((8, 1))), 0.5)
    # at xi = 0 only even orders contribute, and they enter with Hermite values at 0
    assert zero.shape == (ref_solution.grid.size,)


def test_duality_pair():
    assert cf.duality_pair(np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0])) == 32.0
    fields = np.arange(6.0).reshape(3, 2)
    assert np.array_equal(cf.duality_pair(fields, np.array([1.0, 0.0, 1.0])), [4.0, 6.0])
    assert np.array_equal(cf.duality_pair(np.array([1.0, 0.0, 1.0]), fields), [4.0, 6.0])
    with pytest.raises(ValueError):
        cf.duality_pair(np.ones(2), np.ones(3))


def test_zero_test_function_gives_mean(ref_solution):
    sol = ref_solution
    h = TestFunctionH.zero(1)
    assert np.array_equal(cf.pair_with_test(sol, h, 0.5), cf.mean_field(sol, 0.5))
    direct = cf.solve_uh_direct(sol.spec, h, sol.grid, sol.tgrid, sol.coefficients[0, 0])
    assert np.max(np.abs(direct - sol.coefficients[:, 0])) < 1e-12


def test_uh_pairing_converges(ref_solution):
    sol = ref_solution
    h = TestFunctionH.from_modes(np.array([[0.0], [0.3]]), sol.basis)
    direct = cf.solve_uh_direct(sol.spec, h, sol.grid, sol.tgrid, sol.coefficients[0, 0])
    errs = [cf.compare_uh(sol.restrict(n), h, direct).worst for n in (2, 3, 4)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-6


def test_uh_is_expectation_against_wick_exponential(ref_solution):
    sol = ref_solution
    h = TestFunctionH.from_modes(np.array([[0.0], [0.3]]), sol.basis)
    xi = draw_samples(8, 1, 20_000, seed=11)
    u = cf.evaluate_samples(sol, xi, 0.5)[:, ::16]
    w = np.array([wick_exponential(h, s, sol.basis) for s in xi])
    prod = u * w[:, None]
    se = prod.std(axis=0, ddof=1) / np.sqrt(len(w))
    assert np.all(np.abs(prod.mean(axis=0) - cf.pair_with_test(sol, h, 0.5)[::16]) <= 3 * se)


def test_moment_csv(tmp_path, ref_solution):
    cf.moments(ref_solution, 0.5).to_csv(tmp_path / "m.csv", ref_solution.grid)
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "x1,mean,second_moment,variance" and len(lines) == 129


def test_duality_with_wick_weights_is_pairing(ref_solution):
    from wienerchaos.stochastic_basis import h_coefficients, wick_weights

    sol = ref_solution
    h = TestFunctionH.from_modes(np.array([[0.1], [0.3], [-0.2]]), sol.basis)
    w = wick_weights(h_coefficients(h, sol.basis)[:8, :1], sol.index_set)
    direct = cf.duality_pair(sol.at(0.5), w)
    assert np.max(np.abs(direct - cf.pair_with_test(sol, h, 0.5))) < 1e-12
