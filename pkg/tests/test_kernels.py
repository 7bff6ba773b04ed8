import os
import subprocess
import sys

import numpy as np
import pytest

from wienerchaos import _kernels
from wienerchaos.multiindex import enumerate_indices


@pytest.fixture
def rng():
    return np.random.default_rng(3)


def test_hermite_table_backends_agree(rng):
    x = rng.standard_normal((7, 3, 2))
    a = _kernels.hermite_table(x, 6, backend="numpy")
    b = _kernels.hermite_table(x, 6, backend="numba")
    assert a.shape == (7, 3, 2, 7)
    assert np.allclose(a, b, rtol=1e-14, atol=0)
    # H_2(x)/sqrt(2) = (x^2 - 1)/sqrt(2)
    assert np.allclose(a[..., 2], (x**2 - 1) / np.sqrt(2))


def test_xi_products_backends_agree(rng):
    S = enumerate_indices(4, 2, 4)
    table = _kernels.hermite_table(rng.standard_normal((9, 4, 2)), 4)
    mode, chan, cnt = S.padded_support
    a = _kernels.xi_products(table, mode, chan, cnt, backend="numpy")
    b = _kernels.xi_products(table, mode, chan, cnt, backend="numba")
    assert np.array_equal(a, b)
    assert np.all(a[:, 0] == 1.0)


def test_accumulate_backends_agree(rng):
    S = enumerate_indices(4, 2, 3)
    sl, prev = S.order_slices[3], S.order_slices[2]
    parent, w, mode, chan = (arr[sl] for arr in S.lowering)
    parent = np.where(parent >= 0, parent - prev.start, -1)
    mu = rng.standard_normal((2, prev.stop - prev.start, 11))
    mvals = rng.standard_normal(4)
    a = _kernels.accumulate_sources(mu, parent, w, mode, chan, mvals, backend="numpy")
    b = _kernels.accumulate_sources(mu, parent, w, mode, chan, mvals, backend="numba")
    assert np.allclose(a, b, rtol=1e-14, atol=1e-14)
    # direct double loop
    ref = np.zeros_like(a)
    for p in range(parent.shape[0]):
        for j in range(parent.shape[1]):
            if parent[p, j] >= 0:
                ref[p] += w[p, j] * mvals[mode[p, j]] * mu[chan[p, j], parent[p, j]]
    assert np.allclose(a, ref)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.hermite_table(np.zeros(3), 2, backend="fortran")


@pytest.mark.parametrize("flag, expected", [("0", "numpy"), ("off", "numpy"), ("1", "numba")])
def test_environment_flag_selects_backend(flag, expected):
    env = dict(os.environ, WIENERCHAOS_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from wienerchaos import _kernels; print(_kernels.DEFAULT_BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
