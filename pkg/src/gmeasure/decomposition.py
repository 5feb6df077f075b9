"""Mixture representations of the coupled pair kernel and the label process.

A decomposition writes the coupled kernel as ``sum_k lambda_k P^[k] + rho P^[inf]``
where ``P^[k]`` reads only the ``k`` most recent symbols of each past.

Two constructions:

* :class:`BKDecomposition` - closed form for the BK family. Levels are the
  history lengths ``0, m_1, m_2, ...``; level 0 puts mass 1/2 on each
  diagonal cell, level ``m_k`` is the deterministic pair of window majorities.
  Labels are indices of an explicit countable partition of ``[0, 1]``.
* :class:`GreedyDecomposition` - any attractive kernel. Level ``k`` takes
  the largest mass that the lower tail-bracket of the coupled law
  guarantees uniformly over length-``k`` pair histories. Labels are a level
  plus a uniform used against that level's thresholds.
"""

from __future__ import annotations

import bisect
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .coupling import cells_from_cums, overlap_cells
from .errors import (
    InvalidLabel,
    InvalidParams,
    LevelOutOfRange,
    NotAttractive,
    NotDiscrete,
    NotMonotone,
    NumericalAmbiguity,
    NumericalIntegrityError,
    StateSpaceTooLarge,
)
from .kernels import M_CAP, BKKernel, Kernel, WindowSequence
from .past import Past, PairPast, all_histories, from_sign, history_index, random_ordered_pair, window_sum

DISCRETE, HYBRID = "discrete", "hybrid"
AMBIGUITY_TOL = 1e-12
MAX_PAIR_STATES = 10**8
RHO_ZERO = 1e-12


@dataclass(frozen=True)
class DiscreteLabel:
    index: int


@dataclass(frozen=True)
class HybridLabel:
    """``level = None`` is the residual label."""

    level: int | None
    u: float


Label = Union[DiscreteLabel, HybridLabel]


@dataclass
class UpdateDiagnostics:
    residual_labels: int = 0
    bias_events: int = 0

    @property
    def bias_bound(self) -> float:
        """Total-variation bound on the bias from ambiguous residual thresholds."""
        return self.bias_events * AMBIGUITY_TOL


@dataclass(frozen=True, eq=False)
class Thresholds:
    """Cumulative cell masses of one level in lexicographic ``(a, b)`` order."""

    level: int
    s: int
    values: np.ndarray

    def r(self, a: int, b: int) -> float:
        """``r_{a,b}`` with ``r_{1,0} = 0`` and ``r_{a,0} = r_{a-1,s}``."""
        if b == 0:
            return 0.0 if a == 1 else self.r(a - 1, self.s)
        return float(self.values[(a - 1) * self.s + (b - 1)])

    def cell(self, u: float) -> tuple[int, int]:
        c = int(np.searchsorted(self.values, u, side="right"))
        c = min(c, self.s * self.s - 1)
        return c // self.s + 1, c % self.s + 1

    def kernel(self) -> np.ndarray:
        return np.diff(np.concatenate(([0.0], self.values))).reshape(self.s, self.s)


def _thresholds(cells: np.ndarray) -> np.ndarray:
    """Cumulative lexicographic sums along the flattened last two axes, ending at 1."""
    flat = cells.reshape(cells.shape[:-2] + (-1,))
    thr = np.cumsum(flat, axis=-1)
    thr[..., -1] = 1.0
    return thr


class Decomposition(ABC):
    kernel: Kernel
    mode: str
    levels: tuple[int, ...]
    weights: np.ndarray
    residual: float

    @property
    def s(self) -> int:
        return self.kernel.s

    def weight(self, level: int) -> float:
        try:
            return float(self.weights[self.levels.index(level)])
        except ValueError:
            return 0.0

    @abstractmethod
    def markov(self, level: int, left: Sequence[int], right: Sequence[int]) -> np.ndarray:
        """``P^[level]((a, b) | left, right)`` as an ``s x s`` table."""

    def thresholds(self, level: int, left: Sequence[int], right: Sequence[int]) -> Thresholds:
        cells = self.markov(level, left, right)
        return Thresholds(level, self.s, _thresholds(cells))

    @abstractmethod
    def label_from_uniforms(self, u: np.ndarray) -> Label: ...

    @abstractmethod
    def update(self, pp: PairPast, label: Label, diagnostics: UpdateDiagnostics | None = None,
               strict: bool = False) -> tuple[int, int]: ...

    @abstractmethod
    def interval_counts(self) -> dict[int, int]: ...

    def mixture(self, pp: PairPast, depth: int | None = None) -> np.ndarray:
        """``sum lambda_k P^[k]`` over the listed levels up to ``depth``."""
        out = np.zeros((self.s, self.s))
        for level, w in zip(self.levels, self.weights):
            if depth is not None and level > depth:
                break
            if w > 0:
                out += w * self.markov(level, pp.left.head(level), pp.right.head(level))
        return out

    def report(self) -> dict:
        return {
            "mode": self.mode,
            "levels": [level_json(v) for v in self.levels],
            "weights": [float(w) for w in self.weights],
            "residual": float(self.residual),
            "interval_counts": {str(level_json(k)): v for k, v in self.interval_counts().items()},
        }


def level_json(level: int) -> int | str:
    """Levels beyond the int64 window cap are reported by magnitude only."""
    if level <= M_CAP:
        return int(level)
    return f"~1e{math.log10(level):.3f}"


def sample_label(dec: Decomposition, rng: np.random.Generator) -> Label:
    return dec.label_from_uniforms(rng.random(2))


# --------------------------------------------------------------------------
# BK closed form


def bk_label_kmax(r: float) -> int:
    """Deepest level reachable from a double-precision uniform (with margin)."""
    return int(math.ceil(math.log(2.0**-60) / math.log(r))) + 2


class BKDecomposition(Decomposition):
    mode = DISCRETE

    def __init__(self, kernel: BKKernel):
        if not isinstance(kernel, BKKernel):
            raise InvalidParams("BK decomposition needs a BK kernel")
        self.kernel = kernel
        eps, J = kernel.eps, kernel.depth
        self.eps = eps
        self.levels = (0,) + kernel.m.first(J)
        # rational arithmetic keeps every level mass correctly rounded
        scale = 1 - 2 * Fraction(eps)
        self.weights = np.array([2 * eps] + [float(scale * kernel.exact_lam(j)) for j in range(1, J + 1)])
        self.residual = float(scale * Fraction(kernel.r) ** J)
        self._level_index = {m: k for k, m in enumerate(self.levels)}
        self.kmax = bk_label_kmax(kernel.r)

    @cached_property
    def windows(self) -> np.ndarray:
        """Capped ``m_k`` for ``k = 0..kmax`` (index 0 unused)."""
        return self.kernel.m.capped(self.kmax)

    # labels -------------------------------------------------------------
    def label_mass(self, j: int) -> float:
        if j < 0:
            raise InvalidLabel(f"label index {j} < 0")
        if j < 2:
            return self.eps
        return float((1 - 2 * Fraction(self.eps)) * self.kernel.exact_lam(j - 1))

    def interval(self, j: int) -> tuple[float, float]:
        """The interval ``I_j``: ``[0, eps]``, ``[eps, 2 eps]``, then one per window level."""
        eps, r = self.eps, self.kernel.r
        if j < 0:
            raise InvalidLabel(f"label index {j} < 0")
        if j == 0:
            return (0.0, eps)
        if j == 1:
            return (eps, 2 * eps)
        k = j - 1
        scale = 1 - 2 * eps
        return (2 * eps + scale * (1 - r ** (k - 1)), 2 * eps + scale * (1 - r**k))

    def label_level(self, j: int) -> int:
        """History length read by label ``j``."""
        return 0 if j < 2 else self.kernel.m[j - 1]

    def label_from_uniforms(self, u) -> DiscreteLabel:
        w = float(np.atleast_1d(u)[0])
        eps = self.eps
        if w < eps:
            return DiscreteLabel(0)
        if w < 2 * eps:
            return DiscreteLabel(1)
        v = (w - 2 * eps) / (1 - 2 * eps)
        k = int(math.floor(math.log1p(-v) / math.log(self.kernel.r))) + 1
        return DiscreteLabel(min(max(k, 1), self.kmax) + 1)

    # kernels --------------------------------------------------------------
    def markov(self, level: int, left: Sequence[int], right: Sequence[int]) -> np.ndarray:
        if level not in self._level_index:
            raise LevelOutOfRange(f"{level} is not a level of this decomposition")
        out = np.zeros((2, 2))
        if level == 0:
            out[0, 0] = out[1, 1] = 0.5
            return out
        if len(left) != level or len(right) != level:
            raise InvalidParams("histories must have the level's length")
        a = from_sign(_maj_symbols(left))
        b = from_sign(_maj_symbols(right))
        out[a - 1, b - 1] = 1.0
        return out

    def update(self, pp, label, diagnostics=None, strict=False):
        if not isinstance(label, DiscreteLabel):
            raise InvalidLabel("BK decomposition takes discrete labels")
        j = label.index
        if j == 0:
            return (1, 1)
        if j == 1:
            return (2, 2)
        if j < 0 or j - 1 > self.kmax:
            raise InvalidLabel(f"label index {j} out of range")
        m = self.kernel.m[j - 1]
        a = from_sign(1 if window_sum(pp.left, m) >= 0 else -1)
        b = from_sign(1 if window_sum(pp.right, m) >= 0 else -1)
        return (a, b)

    def interval_counts(self) -> dict[int, int]:
        return {int(level): (2 if level == 0 else 1) for level in self.levels}

    def tail_cell(self, pp: PairPast) -> np.ndarray:
        """Where the truncated kernel puts levels beyond ``J``: the tail majorities."""
        out = np.zeros((2, 2))
        out[pp.left.tail - 1, pp.right.tail - 1] = 1.0
        return out


def _maj_symbols(window: Sequence[int]) -> int:
    return 1 if sum(2 * v - 3 for v in window) >= 0 else -1


def bk_decompose(eps: float, r: float, m: WindowSequence, J: int | None = None) -> BKDecomposition:
    return BKDecomposition(BKKernel(eps, r, m, J))


# --------------------------------------------------------------------------
# Greedy construction


class GreedyDecomposition(Decomposition):
    mode = HYBRID

    def __init__(self, kernel: Kernel, K: int = 8, gate_trials: int = 10_000, gate_seed: int = 0):
        if not kernel.attractive:
            raise NotAttractive(f"{kernel.family} kernel is not attractive")
        if K < 0:
            raise InvalidParams("K must be >= 0")
        s = kernel.s
        if s ** (2 * K) > MAX_PAIR_STATES:
            raise StateSpaceTooLarge(f"{s}^(2*{K}) pair histories exceed {MAX_PAIR_STATES}")
        self.kernel = kernel
        self.K_requested = K
        self.gate_trials = gate_trials
        self.gate_seed = gate_seed
        self._build(K)

    def _build(self, K: int) -> None:
        kernel, s = self.kernel, self.kernel.s
        tables: list[np.ndarray] = []
        weights: list[float] = []
        alpha_prev = 0.0
        M_prev = None
        for k in range(K + 1):
            hist = all_histories(k, s)
            lo = np.array([kernel.cum_vector(Past(tuple(h), 1)) for h in hist])
            hi = np.array([kernel.cum_vector(Past(tuple(h), s)) for h in hist])
            L = overlap_cells(lo[:, None, :], hi[:, None, :], lo[None, :, :], hi[None, :, :])
            n = s**k
            if M_prev is None:
                R = L
            else:
                idx = np.arange(n) % (n // s)
                R = L - M_prev[idx[:, None], idx[None, :]]
            if R.min() < -1e-12:
                raise NumericalIntegrityError("greedy remainder went negative")
            R = np.maximum(R, 0.0)
            alpha = max(float(L.sum(axis=(2, 3)).min()), alpha_prev)
            lam = alpha - alpha_prev
            mass = R.sum(axis=(2, 3), keepdims=True)
            if lam > 0:
                P = np.where(mass > 0, R / np.where(mass > 0, mass, 1.0), 1.0 / (s * s))
            else:
                lam = 0.0
                P = np.full(R.shape, 1.0 / (s * s))
            M = (0.0 if M_prev is None else M_prev[idx[:, None], idx[None, :]]) + lam * P
            tables.append(P)
            weights.append(lam)
            alpha_prev, M_prev = alpha, M
            if 1.0 - alpha < RHO_ZERO:
                break
        rho = 1.0 - alpha_prev
        self.K = len(tables) - 1
        self.levels = tuple(range(self.K + 1))
        self.weights = np.array(weights)
        self.residual = 0.0 if rho < RHO_ZERO else rho
        self.tables = tables
        self.thresholds_table = [_thresholds(P) for P in tables]
        self.covered = M_prev
        self.cum_weights = np.cumsum(self.weights)
        self._cum_list = self.cum_weights.tolist()
        self._rows: dict[tuple[int, int, int], list[float]] = {}
        self._last_residual: tuple[PairPast, np.ndarray] | None = None

    @cached_property
    def flat_thresholds(self) -> tuple[np.ndarray, np.ndarray]:
        """All threshold rows concatenated, with the start offset of each level."""
        parts = [t.reshape(-1) for t in self.thresholds_table]
        offsets = np.cumsum([0] + [p.size for p in parts[:-1]]).astype(np.int64)
        return np.concatenate(parts), offsets

    def _check_level(self, level: int) -> None:
        if not 0 <= level <= self.K:
            raise LevelOutOfRange(f"level {level} outside 0..{self.K}")

    def markov(self, level, left, right):
        self._check_level(level)
        if len(left) != level or len(right) != level:
            raise InvalidParams("histories must have the level's length")
        return self.tables[level][history_index(left, self.s), history_index(right, self.s)].copy()

    def thresholds(self, level, left, right):
        self._check_level(level)
        vals = self.thresholds_table[level][history_index(left, self.s), history_index(right, self.s)]
        return Thresholds(level, self.s, vals)

    def residual_kernel(self, pp: PairPast) -> np.ndarray:
        """``(coupled law - covered mass) / rho`` at a fully specified pair."""
        if self.residual == 0.0:
            raise InvalidLabel("decomposition has no residual mass")
        joint = cells_from_cums(self.kernel.cum_vector(pp.left), self.kernel.cum_vector(pp.right))
        hl = history_index(pp.left.head(self.K), self.s)
        hr = history_index(pp.right.head(self.K), self.s)
        rest = joint - self.covered[hl, hr]
        if rest.min() < -1e-10:
            raise NumericalIntegrityError("covered mass exceeds the coupled law")
        rest = np.maximum(rest, 0.0)
        return rest / rest.sum()

    def label_from_uniforms(self, u) -> HybridLabel:
        u1, u2 = float(u[0]), float(u[1])
        k = bisect.bisect_right(self._cum_list, u1)
        return HybridLabel(None if k > self.K else k, u2)

    def update(self, pp, label, diagnostics=None, strict=False):
        if not isinstance(label, HybridLabel) or not 0.0 <= label.u < 1.0:
            raise InvalidLabel("greedy decomposition takes hybrid labels with u in [0, 1)")
        if label.level is not None:
            k = label.level
            self._check_level(k)
            key = (k, history_index(pp.left.head(k), self.s), history_index(pp.right.head(k), self.s))
            row = self._rows.get(key)
            if row is None:
                # scalar bisection on a plain list beats a numpy call per update
                row = self._rows[key] = self.thresholds_table[k][key[1], key[2]].tolist()
            c = min(bisect.bisect_right(row, label.u), self.s * self.s - 1)
            return c // self.s + 1, c % self.s + 1
        if diagnostics is not None:
            diagnostics.residual_labels += 1
        last = self._last_residual
        if last is not None and last[0] == pp:
            thr = last[1]
        else:
            thr = _thresholds(self.residual_kernel(pp))
            self._last_residual = (pp, thr)
        c = int(np.searchsorted(thr, label.u, side="right"))
        c = min(c, self.s * self.s - 1)
        near = np.abs(thr[:-1] - label.u) < AMBIGUITY_TOL
        if near.any():
            if strict:
                raise NumericalAmbiguity(f"u = {label.u!r} is within {AMBIGUITY_TOL} of a threshold")
            # assign the cell just below the nearby threshold
            t = int(np.argmax(near))
            widths = np.diff(np.concatenate(([0.0], thr)))
            c = t
            while c > 0 and widths[c] == 0.0:
                c -= 1
            if diagnostics is not None:
                diagnostics.bias_events += 1
        return c // self.s + 1, c % self.s + 1

    def interval_counts(self) -> dict[int, int]:
        out = {}
        for k, thr in enumerate(self.thresholds_table):
            if self.weights[k] == 0:
                out[k] = 0
            else:
                vals = np.unique(np.concatenate(([0.0, 1.0], thr.reshape(-1))))
                out[k] = len(vals) - 1
        return out

    @cached_property
    def monotone_violations(self) -> int:
        """Order violations of single updates over random ordered pairs and labels."""
        rng = np.random.default_rng(self.gate_seed)
        bad = 0
        for trial in range(self.gate_trials):
            pp = random_ordered_pair(rng, self.s, max_len=2 * self.K + 4)
            if trial == 0:
                pp = PairPast.extremal(self.s)
            a, b = self.update(pp, self.label_from_uniforms(rng.random(2)))
            if a > b:
                bad += 1
        return bad

    def require_monotone(self) -> None:
        if self.monotone_violations:
            raise NotMonotone(f"{self.monotone_violations} order violations in {self.gate_trials} trials")


def greedy_decompose(kernel: Kernel, K: int = 8) -> GreedyDecomposition:
    return GreedyDecomposition(kernel, K)


def decompose(kernel: Kernel, mode: str | None = None, K: int = 8) -> Decomposition:
    """BK kernels default to the closed form; everything else is greedy."""
    if mode is None:
        mode = DISCRETE if isinstance(kernel, BKKernel) else HYBRID
    if mode == DISCRETE:
        return BKDecomposition(kernel)  # type: ignore[arg-type]
    if mode == HYBRID:
        return GreedyDecomposition(kernel, K)
    raise InvalidParams(f"unknown decomposition mode {mode!r}")


# --------------------------------------------------------------------------
# Entropy


@dataclass(frozen=True)
class EntropyReport:
    value: float
    partial: float
    remainder: float
    depth: int


def _plogp(p: np.ndarray) -> np.ndarray:
    return np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)


def discrete_entropy(masses) -> float:
    """``-sum p log p`` in nats over a finite list of atom masses."""
    p = np.asarray(masses, dtype=np.float64)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise InvalidParams("masses must be a probability vector")
    return float(-_plogp(p).sum())


def bk_label_entropy(eps: float, r: float) -> float:
    """Entropy in nats of the BK label law, in closed form."""
    A = (1 - 2 * eps) * (1 - r)
    return -2 * eps * math.log(eps) - (1 - 2 * eps) * (math.log(A) + r * math.log(r) / (1 - r))


def label_entropy(dec: Decomposition, depth: int | None = None) -> EntropyReport:
    """``-sum p log p`` over the label partition.

    Levels up to ``depth`` (default the truncation depth) are summed directly;
    the geometric remainder is added in closed form and reported separately.
    """
    if dec.mode != DISCRETE:
        raise NotDiscrete("entropy needs an explicit countable partition")
    bk: BKDecomposition = dec  # type: ignore[assignment]
    eps, r = bk.eps, bk.kernel.r
    J = bk.kernel.depth if depth is None else depth
    k = np.arange(1, J + 1)
    A = (1 - 2 * eps) * bk.kernel.c
    masses = np.concatenate(([eps, eps], A * r**k))
    partial = float(-_plogp(masses).sum())
    # sum_{k > J} A r^k (log A + k log r)
    head = A * r ** (J + 1) / (1 - r)
    ksum = A * r ** (J + 1) * ((J + 1) - J * r) / (1 - r) ** 2
    remainder = -(head * math.log(A) + ksum * math.log(r))
    return EntropyReport(partial + remainder, partial, remainder, J)
