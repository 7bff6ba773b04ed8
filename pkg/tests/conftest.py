import numpy as np
import pytest

from wienerchaos.discretization import OperatorSpec, SpatialGrid
from wienerchaos.multiindex import enumerate_indices
from wienerchaos.propagator import TimeGrid, solve
from wienerchaos.stochastic_basis import CosineBasis

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ref_grid():
    return SpatialGrid.uniform(1, 2 * np.pi, 128)


@pytest.fixture(scope="session")
def ref_spec():
    return OperatorSpec(d=1, K=1, diffusion=1.0, sigma=[[1.0]])


@pytest.fixture(scope="session")
def ref_solution(ref_spec, ref_grid):
    tg = TimeGrid(0.5, 256)
    basis = CosineBasis(0.5, 8)
    return solve(ref_spec, ref_grid, tg, basis, enumerate_indices(8, 1, 4), np.sin(ref_grid.points[0]))


@pytest.fixture
def small_grid():
    return SpatialGrid.uniform(1, 2 * np.pi, 32)
