"""Multi-indices over (temporal mode, noise channel) pairs.

A multi-index assigns a nonnegative count to each pair ``(i, k)`` where
``i >= 1`` labels a temporal basis function and ``k >= 1`` a noise channel.
Only finitely many counts are nonzero; zero entries are never stored.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

DEFAULT_CARDINALITY_CAP = 200_000

# Largest factorial that still fits a signed 64-bit integer is 20!.
_INT64_MAX = np.iinfo(np.int64).max


class TruncationTooLarge(ValueError):
    """Requested index set exceeds the configured cardinality cap."""


class FactorialOverflow(OverflowError):
    """alpha! does not fit in a signed 64-bit integer."""


@dataclass(frozen=True, order=False)
class MultiIndex:
    """Sparse multi-index ``alpha = (alpha_i^k)``.

    ``entries`` is a sorted tuple of ``((i, k), count)`` with ``count >= 1``.
    Use :meth:`from_dict` or :meth:`from_pairs` rather than the raw constructor
    when the input is not already canonical.
    """

    entries: tuple[tuple[tuple[int, int], int], ...] = ()

    def __post_init__(self) -> None:
        keys = [key for key, _ in self.entries]
        if keys != sorted(set(keys)):
            raise ValueError("entries must be sorted with unique (i, k) keys")
        for (i, k), count in self.entries:
            if i < 1 or k < 1:
                raise ValueError(f"mode and channel indices start at 1, got {(i, k)}")
            if count < 1:
                raise ValueError(f"stored counts must be positive, got {count} at {(i, k)}")

    @classmethod
    def from_dict(cls, counts: Mapping[tuple[int, int], int]) -> MultiIndex:
        items = sorted((tuple(key), int(c)) for key, c in counts.items() if c != 0)
        if any(c < 0 for _, c in items):
            raise ValueError("multi-index counts must be nonnegative")
        return cls(tuple(items))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> MultiIndex:
        """Build from a multiset of ``(i, k)`` pairs, each occurrence adding one."""
        counts: dict[tuple[int, int], int] = {}
        for key in pairs:
            counts[key] = counts.get(key, 0) + 1
        return cls.from_dict(counts)

    def __getitem__(self, key: tuple[int, int]) -> int:
        return self.as_dict().get(key, 0)

    def __iter__(self) -> Iterator[tuple[tuple[int, int], int]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __add__(self, other: MultiIndex) -> MultiIndex:
        counts = self.as_dict()
        for key, c in other.entries:
            counts[key] = counts.get(key, 0) + c
        return MultiIndex.from_dict(counts)

    def as_dict(self) -> dict[tuple[int, int], int]:
        return dict(self.entries)

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"MultiIndex({render(self) or 'empty'})"


EMPTY = MultiIndex()


def order(alpha: MultiIndex) -> int:
    """Total order |alpha|."""
    return sum(c for _, c in alpha.entries)


def factorial(alpha: MultiIndex) -> int:
    """alpha! as an exact integer, raising if it leaves the int64 range."""
    out = 1
    for _, c in alpha.entries:
        out *= math.factorial(c)
        if out > _INT64_MAX:
            raise FactorialOverflow(f"factorial of {render(alpha)} exceeds int64")
    return out


def decrement(alpha: MultiIndex, i: int, k: int) -> MultiIndex:
    """alpha with entry (i, k) lowered by one, clamped at zero."""
    counts = alpha.as_dict()
    c = counts.get((i, k), 0)
    if c == 0:
        return alpha
    if c == 1:
        del counts[(i, k)]
    else:
        counts[(i, k)] = c - 1
    return MultiIndex.from_dict(counts)


@dataclass(frozen=True)
class WeightSequence:
    """Positive weights q_1..q_K defining the weighted chaos norm."""

    q: tuple[float, ...]

    def __post_init__(self) -> None:
        q = tuple(float(v) for v in self.q)
        object.__setattr__(self, "q", q)
        if not q:
            raise ValueError("weight sequence must be non-empty")
        if not all(v > 0 and math.isfinite(v) for v in q):
            raise ValueError(f"weights must be positive and finite, got {q}")

    @classmethod
    def uniform(cls, value: float, K: int) -> WeightSequence:
        return cls((value,) * K)

    @classmethod
    def ones(cls, K: int) -> WeightSequence:
        return cls.uniform(1.0, K)

    def __len__(self) -> int:
        return len(self.q)

    def inverse(self) -> WeightSequence:
        return WeightSequence(tuple(1.0 / v for v in self.q))


def weight(Q: WeightSequence, alpha: MultiIndex) -> float:
    """q^alpha = prod q_k^{alpha_i^k}."""
    out = 1.0
    for (_, k), c in alpha.entries:
        if k > len(Q):
            raise IndexError(f"channel {k} outside weight sequence of length {len(Q)}")
        out *= Q.q[k - 1] ** c
    return out


def render(alpha: MultiIndex) -> str:
    """Canonical text form, e.g. ``"(1,1):2;(3,2):1"``; empty string for the zero index."""
    return ";".join(f"({i},{k}):{c}" for (i, k), c in alpha.entries)


_TOKEN = re.compile(r"^\((\d+),(\d+)\):(\d+)$")


def parse(text: str) -> MultiIndex:
    """Inverse of :func:`render`."""
    text = text.strip()
    if not text:
        return EMPTY
    counts: dict[tuple[int, int], int] = {}
    for token in text.split(";"):
        m = _TOKEN.match(token.strip())
        if m is None:
            raise ValueError(f"malformed multi-index token {token!r}")
        key = (int(m.group(1)), int(m.group(2)))
        if key in counts:
            raise ValueError(f"duplicate key {key} in {text!r}")
        counts[key] = int(m.group(3))
    return MultiIndex.from_dict(counts)


def cardinality(I: int, K: int, N: int) -> int:
    return math.comb(I * K + N, N)


@dataclass(frozen=True)
class MultiIndexSet:
    """Total-degree truncation of the index set, in graded-lexicographic order."""

    indices: tuple[MultiIndex, ...]
    I: int
    K: int
    N: int
    _position: dict[MultiIndex, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_position", {a: p for p, a in enumerate(self.indices)})
        if len(self._position) != len(self.indices):
            raise ValueError("duplicate multi-indices")

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self.indices)

    def __getitem__(self, p: int) -> MultiIndex:
        return self.indices[p]

    def __contains__(self, alpha: object) -> bool:
        return alpha in self._position

    def position(self, alpha: MultiIndex) -> int:
        return self._position[alpha]

    @cached_property
    def orders(self) -> np.ndarray:
        return np.array([order(a) for a in self.indices], dtype=np.int64)

    @cached_property
    def order_slices(self) -> tuple[slice, ...]:
        """``order_slices[n]`` selects the contiguous block of order-n indices."""
        bounds = np.searchsorted(self.orders, np.arange(self.N + 2))
        return tuple(slice(int(bounds[n]), int(bounds[n + 1])) for n in range(self.N + 1))

    @cached_property
    def sqrt_factorials(self) -> np.ndarray:
        return np.sqrt(np.array([float(factorial(a)) for a in self.indices]))

    @cached_property
    def max_support(self) -> int:
        return max((len(a) for a in self.indices), default=0)

    @cached_property
    def padded_support(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Padded arrays ``(mode, channel, count)`` of shape (len, max_support).

        Modes and channels are zero-based; padding slots carry count 0.
        """
        D = max(self.max_support, 1)
        mode = np.zeros((len(self), D), dtype=np.int64)
        chan = np.zeros((len(self), D), dtype=np.int64)
        cnt = np.zeros((len(self), D), dtype=np.int64)
        for p, alpha in enumerate(self.indices):
            for j, ((i, k), c) in enumerate(alpha.entries):
                mode[p, j], chan[p, j], cnt[p, j] = i - 1, k - 1, c
        return mode, chan, cnt

    @cached_property
    def lowering(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Edges of the propagator: for each index, its decrements.

        Returns padded arrays ``(parent, sqrt_count, mode, channel)`` of shape
        (len, max_support): ``parent[p, j]`` is the position of
        ``alpha^-(i, k)`` for the j-th support entry of ``alpha = indices[p]``,
        or -1 in padding slots.
        """
        mode, chan, cnt = self.padded_support
        parent = np.full(mode.shape, -1, dtype=np.int64)
        sqrt_count = np.zeros(mode.shape)
        for p, alpha in enumerate(self.indices):
            for j, ((i, k), c) in enumerate(alpha.entries):
                parent[p, j] = self._position[decrement(alpha, i, k)]
                sqrt_count[p, j] = math.sqrt(c)
        return parent, sqrt_count, mode, chan

    def restrict(self, N: int) -> MultiIndexSet:
        """Sub-set of indices with order <= N (a prefix, by the graded ordering)."""
        if N > self.N:
            raise ValueError(f"cannot extend truncation from {self.N} to {N}")
        stop = self.order_slices[N].stop
        return MultiIndexSet(self.indices[:stop], self.I, self.K, N)


def enumerate_indices(I: int, K: int, N: int, cap: int = DEFAULT_CARDINALITY_CAP) -> MultiIndexSet:
    """All multi-indices with modes <= I, channels <= K and order <= N.

    Within one order, indices are sorted lexicographically on the flattened
    ``(i, k, count)`` sequence of their sorted entries.
    """
    if I < 1 or K < 1 or N < 0:
        raise ValueError(f"need I >= 1, K >= 1, N >= 0; got I={I}, K={K}, N={N}")
    size = cardinality(I, K, N)
    if size > cap:
        raise TruncationTooLarge(f"truncation (I={I}, K={K}, N={N}) has {size} indices, cap is {cap}")
    variables = [(i, k) for i in range(1, I + 1) for k in range(1, K + 1)]
    out: list[MultiIndex] = []
    for n in range(N + 1):
        grade = [MultiIndex.from_pairs(combo) for combo in combinations_with_replacement(variables, n)]
        grade.sort(key=_flat_key)
        out.extend(grade)
    return MultiIndexSet(tuple(out), I, K, N)


def _flat_key(alpha: MultiIndex) -> tuple[int, ...]:
    return tuple(v for (i, k), c in alpha.entries for v in (i, k, c))


def from_indices(indices: Sequence[MultiIndex], I: int, K: int) -> MultiIndexSet:
    """Wrap an explicit list, checking the ordering and decrement-closure invariants."""
    N = max((order(a) for a in indices), default=0)
    ordered = sorted(indices, key=lambda a: (order(a), _flat_key(a)))
    if list(indices) != ordered:
        raise ValueError("indices must be in graded-lexicographic order")
    s = MultiIndexSet(tuple(indices), I, K, N)
    for alpha in indices:
        for (i, k), _ in alpha.entries:
            if i > I or k > K:
                raise ValueError(f"{render(alpha)} leaves the (I={I}, K={K}) box")
            if decrement(alpha, i, k) not in s:
                raise ValueError(f"set is not closed under decrement at {render(alpha)}")
    return s
