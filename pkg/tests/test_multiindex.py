import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wienerchaos.multiindex import (
    EMPTY,
    FactorialOverflow,
    MultiIndex,
    TruncationTooLarge,
    WeightSequence,
    cardinality,
    decrement,
    enumerate_indices,
    factorial,
    from_indices,
    order,
    parse,
    render,
    weight,
)

counts = st.dictionaries(st.tuples(st.integers(1, 6), st.integers(1, 3)), st.integers(0, 5), max_size=6)


def test_empty_index():
    assert order(EMPTY) == 0
    assert factorial(EMPTY) == 1
    assert render(EMPTY) == ""
    assert parse("") == EMPTY


def test_order_and_factorial():
    a = MultiIndex.from_dict({(1, 1): 2, (3, 2): 1})
    assert order(a) == 3
    assert factorial(a) == 2
    assert a[(1, 1)] == 2 and a[(2, 1)] == 0


def test_factorial_overflow():
    assert factorial(MultiIndex.from_dict({(1, 1): 20})) == math.factorial(20)
    with pytest.raises(FactorialOverflow):
        factorial(MultiIndex.from_dict({(1, 1): 21}))


def test_zero_counts_are_not_stored():
    assert MultiIndex.from_dict({(1, 1): 0, (2, 1): 1}) == MultiIndex.from_dict({(2, 1): 1})


def test_invalid_entries():
    with pytest.raises(ValueError):
        MultiIndex.from_dict({(1, 1): -1})
    with pytest.raises(ValueError):
        MultiIndex(((( 0, 1), 1),))
    with pytest.raises(ValueError):
        MultiIndex((((2, 1), 1), ((1, 1), 1)))


def test_decrement_clamps():
    a = MultiIndex.from_dict({(1, 1): 1})
    assert decrement(a, 1, 1) == EMPTY
    assert decrement(a, 2, 1) == a
    assert decrement(EMPTY, 1, 1) == EMPTY


@given(counts)
def test_render_parse_roundtrip(c):
    a = MultiIndex.from_dict(c)
    assert parse(render(a)) == a


@given(counts, counts)
def test_addition_adds_orders(c1, c2):
    a, b = MultiIndex.from_dict(c1), MultiIndex.from_dict(c2)
    assert order(a + b) == order(a) + order(b)


@pytest.mark.parametrize("text", ["(1,1)", "(1,1):x", "(1,1):1;(1,1):2", "1,1:1"])
def test_parse_rejects_malformed(text):
    with pytest.raises(ValueError):
        parse(text)


def test_weight():
    Q = WeightSequence((0.5, 2.0))
    a = MultiIndex.from_dict({(1, 1): 2, (4, 2): 1})
    assert weight(Q, a) == pytest.approx(0.5**2 * 2.0)
    assert weight(Q, EMPTY) == 1.0
    with pytest.raises(IndexError):
        weight(WeightSequence((1.0,)), a)
    with pytest.raises(ValueError):
        WeightSequence((1.0, 0.0))


def test_cardinality_small_brute_force():
    for I, K, N in product(range(1, 4), range(1, 3), range(0, 4)):
        brute = sum(1 for v in product(range(N + 1), repeat=I * K) if sum(v) <= N)
        S = enumerate_indices(I, K, N)
        assert len(S) == cardinality(I, K, N) == brute


def test_graded_ordering_and_slices():
    S = enumerate_indices(3, 2, 3)
    assert np.all(np.diff(S.orders) >= 0)
    assert S[0] == EMPTY
    for n, sl in enumerate(S.order_slices):
        assert np.all(S.orders[sl] == n)
    # order 1 lists (i, k) in lexicographic order
    firsts = [a.entries[0][0] for a in S.indices[S.order_slices[1]]]
    assert firsts == sorted(firsts)


def test_restrict_is_prefix():
    S = enumerate_indices(4, 1, 4)
    R = S.restrict(2)
    assert R.indices == S.indices[: len(R)]
    assert len(R) == cardinality(4, 1, 2)
    with pytest.raises(ValueError):
        R.restrict(3)


def test_lowering_edges():
    S = enumerate_indices(3, 2, 3)
    parent, w, mode, chan = S.lowering
    for p, a in enumerate(S):
        for j, ((i, k), c) in enumerate(a.entries):
            assert S[parent[p, j]] == decrement(a, i, k)
            assert w[p, j] == pytest.approx(math.sqrt(c))
            assert (mode[p, j], chan[p, j]) == (i - 1, k - 1)
        assert np.all(parent[p, len(a):] == -1)


def test_cap():
    with pytest.raises(TruncationTooLarge):
        enumerate_indices(20, 4, 8, cap=1000)


def test_from_indices_checks_closure():
    a = MultiIndex.from_dict({(1, 1): 2})
    with pytest.raises(ValueError):
        from_indices([EMPTY, a], 1, 1)
    S = from_indices([EMPTY, MultiIndex.from_dict({(1, 1): 1}), a], 1, 1)
    assert S.N == 2
