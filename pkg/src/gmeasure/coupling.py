"""Maximal monotone coupling of two kernel laws and tail-free brackets.

For pasts ``x, y`` the coupled law has cumulative form
``P(X >= a, Y >= b) = min(cum(a, x), cum(b, y))``; cells follow by
inclusion-exclusion. Brackets cover every tail completion of a finite
prefix by evaluating at the constant tails ``1`` and ``s``, which is valid
for attractive kernels since each cumulative is monotone in its own past.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParams, NotAttractive, NumericalIntegrityError
from .kernels import Kernel, cum
from .past import Past, PairPast

CLAMP_TOL = 1e-14


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi + CLAMP_TOL:
            raise InvalidParams(f"interval has lo > hi: {self.lo} > {self.hi}")

    @property
    def width(self) -> float:
        return max(0.0, self.hi - self.lo)

    def contains(self, value: float, tol: float = 1e-12) -> bool:
        return self.lo - tol <= value <= self.hi + tol


@dataclass(frozen=True, eq=False)
class CellTable:
    """``cells[a-1, b-1]`` is the probability of the pair ``(a, b)``."""

    cells: np.ndarray

    @property
    def s(self) -> int:
        return self.cells.shape[0]

    def __getitem__(self, ab: tuple[int, int]) -> float:
        a, b = ab
        return float(self.cells[a - 1, b - 1])

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        """(law of the left symbol, law of the right symbol)."""
        return self.cells.sum(axis=1), self.cells.sum(axis=0)

    def off_diagonal_mass(self) -> float:
        return float(self.cells.sum() - np.trace(self.cells))

    def order_violation_mass(self) -> float:
        """Mass on cells with ``a > b``."""
        return float(np.tril(self.cells, -1).sum())

    def to_csv(self) -> str:
        header = "a," + ",".join(f"b={b}" for b in range(1, self.s + 1))
        rows = [header]
        for a in range(self.s):
            rows.append(f"{a + 1}," + ",".join(repr(float(v)) for v in self.cells[a]))
        return "\n".join(rows) + "\n"


def cells_from_cums(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Inclusion-exclusion on ``min(U[a], V[b])``; ``U, V`` carry the trailing 0."""
    cc = np.minimum.outer(U, V)
    cells = cc[:-1, :-1] - cc[1:, :-1] - cc[:-1, 1:] + cc[1:, 1:]
    low = cells.min()
    if low < -CLAMP_TOL:
        raise NumericalIntegrityError(f"coupling cell {low!r} is negative beyond clamping tolerance")
    return np.maximum(cells, 0.0)


def overlap_cells(U_lo, U_hi, V_lo, V_hi) -> np.ndarray:
    """Lower cells ``max(0, min(U[a], V[b]) - max(U[a+1], V[b+1]))`` over brackets.

    With ``U_lo = U_hi`` and ``V_lo = V_hi`` this is the coupled law itself:
    each cell is the overlap of the two quantile intervals. Arrays may carry
    leading batch axes; the symbol axis is last and includes the trailing 0.
    """
    top = np.minimum(U_lo[..., :-1, None], V_lo[..., None, :-1])
    bottom = np.maximum(U_hi[..., 1:, None], V_hi[..., None, 1:])
    return np.maximum(top - bottom, 0.0)


def coupling_cum(kernel: Kernel, a: int, b: int, pp: PairPast) -> float:
    return min(cum(kernel, a, pp.left), cum(kernel, b, pp.right))


def coupling_table(kernel: Kernel, pp: PairPast) -> CellTable:
    return CellTable(cells_from_cums(kernel.cum_vector(pp.left), kernel.cum_vector(pp.right)))


def coupling_joint(kernel: Kernel, a: int, b: int, pp: PairPast) -> float:
    if not (1 <= a <= kernel.s and 1 <= b <= kernel.s):
        raise InvalidParams("cell outside the alphabet")
    return coupling_table(kernel, pp)[a, b]


def coupling_marginals(kernel: Kernel, pp: PairPast) -> tuple[np.ndarray, np.ndarray]:
    return coupling_table(kernel, pp).marginals()


def _require_attractive(kernel: Kernel) -> None:
    if not kernel.attractive:
        raise NotAttractive(f"{kernel.family} kernel is not attractive; tail brackets are invalid")


def tail_cums(kernel: Kernel, prefix: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative vectors at ``prefix`` completed by tail 1 and by tail s."""
    return (kernel.cum_vector(Past(tuple(prefix), 1)), kernel.cum_vector(Past(tuple(prefix), kernel.s)))


def joint_cum_bracket(
    kernel: Kernel, a: int, b: int, left_prefix: Sequence[int], right_prefix: Sequence[int], k: int | None = None
) -> Interval:
    """Range of ``coupling_cum(a, b)`` over all tail completions of the prefixes."""
    _require_attractive(kernel)
    if k is not None and (len(left_prefix) != k or len(right_prefix) != k):
        raise InvalidParams("prefixes must have length k")
    U_lo, U_hi = tail_cums(kernel, left_prefix)
    V_lo, V_hi = tail_cums(kernel, right_prefix)
    if a == kernel.s + 1 or b == kernel.s + 1:
        return Interval(0.0, 0.0)
    return Interval(min(U_lo[a - 1], V_lo[b - 1]), min(U_hi[a - 1], V_hi[b - 1]))


def joint_cell_bracket(
    kernel: Kernel, left_prefix: Sequence[int], right_prefix: Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper tables for every cell over all tail completions."""
    _require_attractive(kernel)
    U_lo, U_hi = tail_cums(kernel, left_prefix)
    V_lo, V_hi = tail_cums(kernel, right_prefix)
    lo = overlap_cells(U_lo, U_hi, V_lo, V_hi)
    hi = np.minimum(overlap_cells(U_hi, U_lo, V_hi, V_lo), 1.0)
    return lo, hi
