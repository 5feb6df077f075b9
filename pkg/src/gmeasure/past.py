"""Symbols, pasts and the two combinatorial helpers (majority and run length).

Symbols are the integers ``1..s``. Binary examples use the fixed coding
``-1 -> 1`` and ``+1 -> 2``. A :class:`Past` stores ``x_{-1}, x_{-2}, ...``
as a finite prefix (most recent first) followed by a constant tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParams

MINUS, PLUS = 1, 2


def to_sign(symbol: int) -> int:
    """Binary symbol (1 or 2) to its +-1 value."""
    return 2 * symbol - 3


def from_sign(sign: int) -> int:
    return (sign + 3) // 2


@dataclass(frozen=True)
class Past:
    prefix: tuple[int, ...]
    tail: int

    def __post_init__(self):
        prefix = tuple(int(v) for v in self.prefix)
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "tail", int(self.tail))
        if self.tail < 1 or any(v < 1 for v in prefix):
            raise InvalidParams(f"symbols must be >= 1, got {self!r}")

    @classmethod
    def minimal(cls) -> "Past":
        return cls((), 1)

    @classmethod
    def maximal(cls, s: int) -> "Past":
        return cls((), s)

    @classmethod
    def from_signs(cls, prefix: Iterable[int], tail: int) -> "Past":
        """Build a binary past from +-1 values."""
        return cls(tuple(from_sign(v) for v in prefix), from_sign(tail))

    def __len__(self) -> int:
        return len(self.prefix)

    def __getitem__(self, i: int) -> int:
        """Coordinate ``x_{-i}`` for ``i >= 1``."""
        if i < 1:
            raise IndexError("past coordinates are indexed from 1")
        return self.prefix[i - 1] if i <= len(self.prefix) else self.tail

    def head(self, k: int) -> tuple[int, ...]:
        """The ``k`` most recent symbols, filled from the tail if needed."""
        if k <= len(self.prefix):
            return self.prefix[:k]
        return self.prefix + (self.tail,) * (k - len(self.prefix))

    def extend(self, symbol: int) -> "Past":
        """Past seen one step later, after ``symbol`` was emitted."""
        return Past((symbol,) + self.prefix, self.tail)

    def extend_many(self, symbols: Sequence[int]) -> "Past":
        """Append symbols given in time order (oldest first)."""
        return Past(tuple(reversed(tuple(symbols))) + self.prefix, self.tail)

    def max_symbol(self) -> int:
        return max(self.prefix + (self.tail,))

    def leq(self, other: "Past") -> bool:
        """Coordinatewise order ``self <= other``."""
        n = max(len(self.prefix), len(other.prefix))
        for i in range(1, n + 1):
            if self[i] > other[i]:
                return False
        return self.tail <= other.tail

    __le__ = leq

    def __ge__(self, other: "Past") -> bool:
        return other.leq(self)

    def signs(self) -> np.ndarray:
        return 2 * np.asarray(self.prefix, dtype=np.int64) - 3

    def tail_sign(self) -> int:
        return to_sign(self.tail)

    @cached_property
    def sign_cumsum(self) -> np.ndarray:
        """Partial sums of the prefix signs, starting from 0."""
        return np.concatenate(([0], np.cumsum(self.signs())))


@dataclass(frozen=True)
class PairPast:
    left: Past
    right: Past

    @property
    def ordered(self) -> bool:
        return self.left.leq(self.right)

    @classmethod
    def extremal(cls, s: int) -> "PairPast":
        return cls(Past.minimal(), Past.maximal(s))


def maj(window: Sequence[int]) -> int:
    """Majority of a window of +-1 values; ties go to +1."""
    if len(window) == 0:
        raise InvalidParams("maj needs a nonempty window")
    return 1 if sum(window) >= 0 else -1


def window_sum(past: Past, m: int, cumsum: np.ndarray | None = None) -> int:
    """Sum of the +-1 values ``x_{-1} .. x_{-m}`` (binary pasts)."""
    if cumsum is None:
        cumsum = past.sign_cumsum
    n = len(cumsum) - 1
    if m <= n:
        return int(cumsum[m])
    return int(cumsum[n]) + (m - n) * past.tail_sign()


def ell(x: Past) -> float:
    """Number of leading +1 symbols before the first -1 (inf if none)."""
    for i, v in enumerate(x.prefix):
        if v == MINUS:
            return i
    if x.tail == MINUS:
        return len(x.prefix)
    return math.inf


def history_index(symbols: Sequence[int], s: int) -> int:
    """Encode ``(x_{-1}, ..., x_{-k})`` with ``x_{-1}`` least significant.

    Truncating to the ``j`` most recent symbols is then ``index % s**j``.
    """
    idx = 0
    for i, v in enumerate(symbols):
        idx += (v - 1) * s**i
    return idx


def history_symbols(index: int, k: int, s: int) -> tuple[int, ...]:
    out = []
    for _ in range(k):
        index, r = divmod(index, s)
        out.append(r + 1)
    return tuple(out)


def all_histories(k: int, s: int) -> np.ndarray:
    """Array of shape ``(s**k, k)`` with row ``i`` decoding history index ``i``."""
    idx = np.arange(s**k)
    cols = [(idx // s**i) % s + 1 for i in range(k)]
    return np.stack(cols, axis=1) if k else np.zeros((1, 0), dtype=np.int64)


def random_past(rng: np.random.Generator, s: int, max_len: int = 20) -> Past:
    n = int(rng.integers(0, max_len + 1))
    return Past(tuple(rng.integers(1, s + 1, size=n)), int(rng.integers(1, s + 1)))


def random_ordered_pair(rng: np.random.Generator, s: int, max_len: int = 20) -> PairPast:
    """Random ``x <= y`` sharing a prefix length."""
    x = random_past(rng, s, max_len)
    raise_mask = rng.random(len(x.prefix)) < 0.5
    y_prefix = tuple(
        int(rng.integers(v, s + 1)) if up else v for v, up in zip(x.prefix, raise_mask)
    )
    y_tail = int(rng.integers(x.tail, s + 1))
    return PairPast(x, Past(y_prefix, y_tail))
