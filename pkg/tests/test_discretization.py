import numpy as np
import pytest

from wienerchaos.discretization import (
    DegenerateParabolicity,
    LinearSolveError,
    OperatorSpec,
    SpatialGrid,
    ThetaStepper,
    assemble_A,
    assemble_M,
    central_difference,
    coercivity_constant,
    fourier_interpolate,
    parabolicity_classify,
    read_field_csv,
    second_difference,
    step,
    suggest_weights,
    write_field_csv,
)
from wienerchaos.multiindex import WeightSequence


def test_grid_basics():
    g = SpatialGrid.uniform(2, 2 * np.pi, 8)
    assert g.shape == (8, 8) and g.size == 64
    assert g.cell_volume == pytest.approx((2 * np.pi / 8) ** 2)
    assert g.points.shape == (2, 64)
    assert g.integral(np.ones(64)) == pytest.approx((2 * np.pi) ** 2)
    with pytest.raises(ValueError):
        SpatialGrid.uniform(1, 1.0, 10**9)


def test_difference_operators_second_order():
    errs = []
    for n in (32, 64):
        g = SpatialGrid.uniform(1, 2 * np.pi, n)
        x = g.points[0]
        e1 = np.max(np.abs(central_difference(g, 0) @ np.sin(x) - np.cos(x)))
        e2 = np.max(np.abs(second_difference(g, 0) @ np.sin(x) + np.sin(x)))
        errs.append((e1, e2))
    assert errs[0][0] / errs[1][0] == pytest.approx(4, rel=0.05)
    assert errs[0][1] / errs[1][1] == pytest.approx(4, rel=0.05)


def test_forms_agree_for_constant_coefficients():
    g = SpatialGrid.uniform(2, 2 * np.pi, 12)
    spec = OperatorSpec(d=2, K=1, diffusion=[[1.0, 0.2], [0.2, 0.5]], drift=[0.1, -0.3], potential=-0.4)
    x = g.points
    u = np.sin(x[0]) * np.cos(2 * x[1])
    nd = assemble_A(spec, g, 0.0, "nondivergence")(u)
    dv = assemble_A(spec, g, 0.0, "divergence")(u)
    assert np.allclose(nd, dv, atol=1e-12)


def test_divergence_form_is_symmetric_for_variable_diffusion():
    g = SpatialGrid.uniform(1, 2 * np.pi, 40)
    spec = OperatorSpec(d=1, K=1, diffusion=lambda t, x: (1.0 + 0.5 * np.sin(x[0]))[None, None, :],
                        form="divergence")
    A = assemble_A(spec, g, 0.0).matrix
    assert abs(A - A.T).max() < 1e-12


def test_asymmetric_diffusion_rejected():
    g = SpatialGrid.uniform(2, 1.0, 4)
    with pytest.raises(ValueError):
        assemble_A(OperatorSpec(d=2, K=1, diffusion=[[1.0, 0.3], [0.0, 1.0]]), g, 0.0)


def test_noise_operator():
    g = SpatialGrid.uniform(1, 2 * np.pi, 64)
    spec = OperatorSpec(d=1, K=2, sigma=[[1.0, 0.0]], noise_potential=[0.0, 2.0])
    x = g.points[0]
    assert np.allclose(assemble_M(spec, g, 2, 0.0)(np.sin(x)), 2 * np.sin(x))
    with pytest.raises(IndexError):
        assemble_M(spec, g, 3, 0.0)


def test_crank_nicolson_heat_mode():
    g = SpatialGrid.uniform(1, 2 * np.pi, 64)
    spec = OperatorSpec(d=1, K=1, diffusion=1.0)
    A = assemble_A(spec, g, 0.0)
    lam = (2 * np.cos(2 * np.pi / 64) - 2) / (2 * np.pi / 64) ** 2  # discrete eigenvalue of sin x
    dt = 0.01
    u = np.sin(g.points[0])
    out = step(A, None, u, 0.0, dt, theta=0.5)
    factor = (1 + 0.5 * dt * lam) / (1 - 0.5 * dt * lam)
    assert np.allclose(out, factor * u, atol=1e-13)


def test_theta_stepper_sources_and_stacks():
    g = SpatialGrid.uniform(1, 2 * np.pi, 16)
    A = assemble_A(OperatorSpec(d=1, K=1, diffusion=0.0), g, 0.0)  # zero operator
    st = ThetaStepper(A, 0.1, theta=0.5)
    u = np.zeros((2, 16))
    out = st.step(u, 0.0, np.ones((2, 16)), 3 * np.ones((2, 16)))
    assert np.allclose(out, 0.2)  # dt * (s0 + s1) / 2
    with pytest.raises(ValueError):
        ThetaStepper(A, 0.1, theta=1.5)


def test_step_detects_non_finite():
    g = SpatialGrid.uniform(1, 1.0, 8)
    A = assemble_A(OperatorSpec(d=1, K=1, diffusion=0.0), g, 0.0)
    with pytest.raises(LinearSolveError):
        ThetaStepper(A, 0.1).step(np.full(8, np.inf), 0.0)


@pytest.mark.parametrize("sigma, kind", [(1.0, "strong"), (np.sqrt(2.0), "weak"), (2.0, "none")])
def test_classification(sigma, kind):
    g = SpatialGrid.uniform(1, 2 * np.pi, 16)
    spec = OperatorSpec(d=1, K=1, diffusion=1.0, sigma=[[sigma]])
    c = parabolicity_classify(spec, WeightSequence.ones(1), g)
    assert c.kind == kind
    assert c.margin == pytest.approx(2 - sigma**2, abs=1e-12)


def test_weights_restore_parabolicity():
    g = SpatialGrid.uniform(1, 2 * np.pi, 16)
    spec = OperatorSpec(d=1, K=1, diffusion=1.0, sigma=[[2.0]])
    assert parabolicity_classify(spec, WeightSequence((0.5,)), g).kind == "strong"
    Q = suggest_weights(spec, 0.5, g)
    assert parabolicity_classify(spec, Q, g).kind == "strong"
    with pytest.raises(DegenerateParabolicity):
        suggest_weights(OperatorSpec(d=1, K=1, diffusion=0.0, sigma=[[1.0]]), 0.5, g)
    with pytest.raises(ValueError):
        suggest_weights(spec, 1.0, g)


def test_per_channel_rule():
    g = SpatialGrid.uniform(1, 2 * np.pi, 8)
    spec = OperatorSpec(d=1, K=2, diffusion=1.0, sigma=[[1.0, 3.0]])
    Q = suggest_weights(spec, 0.5, g)
    assert Q.q[0] > Q.q[1]
    assert parabolicity_classify(spec, Q, g).kind == "strong"


def test_coercivity_constant():
    g = SpatialGrid.uniform(1, 2 * np.pi, 32)
    # with c = -1 and no noise, 2 <Av, v> <= -2 |v|^2
    spec = OperatorSpec(d=1, K=1, diffusion=1.0, potential=-1.0)
    assert coercivity_constant(spec, WeightSequence.ones(1), g) == pytest.approx(-2.0, abs=1e-10)
    # critical noise with constant coefficients: the constant mode gives C = 0
    crit = OperatorSpec(d=1, K=1, diffusion=0.5, sigma=[[1.0]])
    assert coercivity_constant(crit, WeightSequence.ones(1), g) == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("d", [1, 2])
def test_fourier_interpolation_exact_for_trig(d):
    g = SpatialGrid.uniform(d, 2 * np.pi, 16)
    f = lambda p: np.sin(p[0]) + (np.cos(3 * p[1]) if d == 2 else 0.0)  # noqa: E731
    pts = np.random.default_rng(0).uniform(0, 2 * np.pi, (d, 25))
    assert np.allclose(fourier_interpolate(g, f(g.points), pts), f(pts), atol=1e-12)


def test_field_csv_roundtrip(tmp_path):
    g = SpatialGrid.uniform(1, 1.0, 5)
    v = np.linspace(0, 1, 5) / 3
    write_field_csv(tmp_path / "f.csv", g, {"u": v})
    names, data = read_field_csv(tmp_path / "f.csv")
    assert names == ["x1", "u"]
    assert np.array_equal(data[:, 1], v)
