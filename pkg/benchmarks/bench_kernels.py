"""Compare the numba kernels with their numpy twins.

Run with ``python benchmarks/bench_kernels.py [--repeat R]``. Each kernel is
called once per backend before timing so JIT compilation is excluded, and
the two outputs are checked for agreement before anything is reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from wienerchaos import _kernels
from wienerchaos.discretization import OperatorSpec, SpatialGrid
from wienerchaos.multiindex import enumerate_indices
from wienerchaos.propagator import TimeGrid, solve
from wienerchaos.stochastic_basis import CosineBasis


def best_of(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng: np.random.Generator):
    S = enumerate_indices(8, 1, 6)
    xi = rng.standard_normal((10_000, 8, 1))
    table = _kernels.hermite_table(xi, S.N, backend="numpy")
    mode, chan, cnt = S.padded_support
    yield "hermite_table (10^4 x 8, n<=6)", lambda b: _kernels.hermite_table(xi, S.N, backend=b)
    yield "xi_products (10^4 samples, 3003 indices)", lambda b: _kernels.xi_products(table, mode, chan, cnt, backend=b)

    sl, prev = S.order_slices[6], S.order_slices[5]
    parent, w, md, ch = (arr[sl] for arr in S.lowering)
    parent = np.where(parent >= 0, parent - prev.start, -1)
    mu = rng.standard_normal((1, prev.stop - prev.start, 128))
    mvals = rng.standard_normal(8)
    yield "accumulate_sources (order 6, 128 points)", \
        lambda b: _kernels.accumulate_sources(mu, parent, w, md, ch, mvals, backend=b)

    grid = SpatialGrid.uniform(1, 2 * np.pi, 128)
    spec = OperatorSpec(d=1, K=1, diffusion=1.0, sigma=[[1.0]])
    tg, basis, S4 = TimeGrid(0.5, 256), CosineBasis(0.5, 8), enumerate_indices(8, 1, 4)
    u0 = np.sin(grid.points[0])
    yield "full solve (N=4, I=8, n=128, M=256)", \
        lambda b: solve(spec, grid, tg, basis, S4, u0, store="final", backend=b).coefficients


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':45s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases(rng):
        a, b = fn("numpy"), fn("numba")  # warm-up and agreement check
        diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        print(f"{name:45s} {1e3 * t_np:12.2f} {1e3 * t_nb:12.2f} {t_np / t_nb:8.2f} {diff:11.2e}")


if __name__ == "__main__":
    main()
