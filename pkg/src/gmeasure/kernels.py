"""Kernel families: exact evaluation, continuity and oscillation bounds.

Every kernel exposes ``cum_vector(x)`` returning ``[cum(1), ..., cum(s), 0]``
where ``cum(a) = sum_{i >= a} P(i | x)``. Point probabilities are always
taken as differences of that vector so the two stay consistent to the bit.
"""

from __future__ import annotations

import bisect
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Any

import numpy as np
from scipy.special import expit, zeta

from .errors import InvalidParams, UnsupportedPast
from .past import MINUS, PLUS, Past, ell, history_index, random_ordered_pair

# Windows are clamped here for int64 arithmetic; any window longer than twice
# a trajectory is decided by the tail alone, so the clamp never changes a sign.
M_CAP = (1 << 62) + 1
BK_RESIDUAL_TARGET = 1e-14


class Kernel(ABC):
    s: int
    family: str

    @abstractmethod
    def cum_vector(self, x: Past) -> np.ndarray: ...

    @abstractmethod
    def var_bound(self, k: int) -> float: ...

    @abstractmethod
    def osc_bound(self, n: int) -> float: ...

    @abstractmethod
    def to_dict(self) -> dict[str, Any]: ...

    attractive: bool = True
    var_exact: bool = False
    osc_exact: bool = False

    def prob_vector(self, x: Past) -> np.ndarray:
        c = self.cum_vector(x)
        return c[:-1] - c[1:]

    def check_past(self, x: Past) -> None:
        if x.max_symbol() > self.s:
            raise InvalidParams(f"past uses symbols outside 1..{self.s}")

    def strongly_non_null(self) -> bool | None:
        """``None`` when it cannot be decided from the parameters alone."""
        return None

    def min_prob(self) -> float:
        """A lower bound on ``inf_{a, x} P(a|x)``."""
        return 0.0

    def forward(self, x: Past, uniforms: np.ndarray) -> np.ndarray:
        """Run the kernel from past ``x`` by inversion with the given uniforms.

        Symbol at each step is ``max{a : cum(a) > w}``, so two runs sharing
        uniforms stay ordered whenever the kernel is attractive.
        """
        out = np.empty(len(uniforms), dtype=np.int64)
        past = x
        for t, w in enumerate(uniforms):
            c = self.cum_vector(past)
            a = int(np.count_nonzero(c[:-1] > w))
            out[t] = a
            past = past.extend(a)
        return out


def prob(kernel: Kernel, a: int, x: Past) -> float:
    _check_symbol(kernel, a)
    return float(kernel.prob_vector(x)[a - 1])


def cum(kernel: Kernel, a: int, x: Past) -> float:
    if a == kernel.s + 1:
        return 0.0
    _check_symbol(kernel, a)
    return float(kernel.cum_vector(x)[a - 1])


def var_bound(kernel: Kernel, k: int) -> float:
    if k < 0:
        raise InvalidParams("k must be >= 0")
    return kernel.var_bound(k)


def osc_bound(kernel: Kernel, n: int) -> float:
    if n < 1:
        raise InvalidParams("n must be >= 1")
    return kernel.osc_bound(n)


@dataclass(frozen=True)
class AttractivenessReport:
    trials: int
    violations: int
    max_excess: float


def check_attractive(kernel: Kernel, trials: int = 10_000, seed: int = 0,
                     max_len: int = 20, tol: float = 1e-12) -> AttractivenessReport:
    """Count random ordered pairs ``x <= y`` with ``cum(a, x) > cum(a, y)`` for some ``a``."""
    if trials < 1:
        raise InvalidParams("trials must be >= 1")
    rng = np.random.default_rng(seed)
    bad = 0
    worst = 0.0
    for _ in range(trials):
        pp = random_ordered_pair(rng, kernel.s, max_len)
        excess = float(np.max(kernel.cum_vector(pp.left) - kernel.cum_vector(pp.right)))
        if excess > tol:
            bad += 1
        worst = max(worst, excess)
    return AttractivenessReport(trials, bad, worst)


def _check_symbol(kernel: Kernel, a: int) -> None:
    if not 1 <= a <= kernel.s:
        raise InvalidParams(f"symbol {a} outside 1..{kernel.s}")


# --------------------------------------------------------------------------
# Bramson-Kalikow


@lru_cache(maxsize=256)
def _m_values(rule: str, params: tuple, n: int) -> tuple[int, ...]:
    out: list[int] = []
    if rule == "arithmetic":
        start, step = params
        out = [start + k * step for k in range(n)]
    elif rule == "mersenne":
        out = [2 ** (k + 1) - 1 for k in range(n)]
    elif rule == "fast":
        (factor,) = params
        val = 1
        for k in range(1, n + 1):
            out.append(val)
            nxt = -(-int(factor) * val * 2**k // 1)
            val = nxt if nxt % 2 else nxt + 1
    elif rule == "explicit":
        vals = list(params)
        out = vals[:n]
        while len(out) < n:
            out.append(2 * out[-1] + 1)
    else:
        raise InvalidParams(f"unknown window rule {rule!r}")
    return tuple(out)


@dataclass(frozen=True)
class WindowSequence:
    """Strictly increasing odd window lengths ``m_1 < m_2 < ...``.

    Rules: ``arithmetic`` (start, step), ``mersenne`` (``2**k - 1``),
    ``fast`` (``m_1 = 1``, next odd at least ``factor * m_k * 2**k``) and
    ``explicit`` (given values, continued by ``m -> 2m + 1``).
    """

    rule: str
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if self.rule == "arithmetic":
            start, step = self.params
            if start < 1 or start % 2 == 0 or step < 2 or step % 2:
                raise InvalidParams("arithmetic windows need odd start and even step >= 2")
        elif self.rule == "fast":
            if len(self.params) != 1 or self.params[0] < 1:
                raise InvalidParams("fast windows need factor >= 1")
        elif self.rule == "explicit":
            vals = self.params
            if not vals or any(v % 2 == 0 or v < 1 for v in vals):
                raise InvalidParams("explicit windows must be odd positive integers")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise InvalidParams("explicit windows must be strictly increasing")
        elif self.rule != "mersenne":
            raise InvalidParams(f"unknown window rule {self.rule!r}")

    def first(self, n: int) -> tuple[int, ...]:
        return _m_values(self.rule, self.params, n)

    def __getitem__(self, k: int) -> int:
        """``m_k`` for ``k >= 1``."""
        return self.first(k)[k - 1]

    def capped(self, n: int) -> np.ndarray:
        """``m_1..m_n`` as int64, clamped at :data:`M_CAP`; index 0 is unused."""
        vals = [0] + [min(v, M_CAP) for v in self.first(n)]
        return np.asarray(vals, dtype=np.int64)

    def first_exceeding(self, k: int) -> int:
        """Smallest ``j`` with ``m_j > k``."""
        n = 16
        while self.first(n)[-1] <= k:
            n *= 2
        return bisect.bisect_right(self.first(n), k) + 1

    def to_dict(self) -> dict:
        if self.rule == "arithmetic":
            return {"rule": "arithmetic", "start": self.params[0], "step": self.params[1]}
        if self.rule == "fast":
            return {"rule": "fast", "factor": self.params[0]}
        if self.rule == "explicit":
            return {"rule": "explicit", "values": list(self.params)}
        return {"rule": self.rule}

    @classmethod
    def from_dict(cls, d: dict) -> "WindowSequence":
        rule = d.get("rule")
        if rule == "arithmetic":
            return cls("arithmetic", (int(d.get("start", 1)), int(d.get("step", 2))))
        if rule == "fast":
            return cls("fast", (int(d.get("factor", 10)),))
        if rule == "explicit":
            return cls("explicit", tuple(int(v) for v in d["values"]))
        if rule == "mersenne":
            return cls("mersenne")
        raise InvalidParams(f"unknown window rule {rule!r}")


def default_depth(r: float, target: float = BK_RESIDUAL_TARGET) -> int:
    """Smallest ``J`` with ``sum_{j > J} c r^j = r^J < target``."""
    J = max(1, math.ceil(math.log(target) / math.log(r)))
    while r**J >= target:
        J += 1
    while J > 1 and r ** (J - 1) < target:
        J -= 1
    return J


@dataclass(frozen=True)
class BKKernel(Kernel):
    """Original Bramson-Kalikow kernel on ``{-1, +1}``.

    ``P(+1|x) = eps + (1 - 2 eps) sum_j lambda_j 1{maj(x_{-m_j}^{-1}) = +1}``
    with ``lambda_j = c r^j``. Levels beyond ``J`` carry mass ``r^J``; it is
    assigned to the majority of the tail, which is exact whenever those
    windows are long enough to be decided by the tail.
    """

    eps: float
    r: float
    m: WindowSequence
    J: int | None = None
    s: int = field(default=2, init=False)
    family: str = field(default="bk", init=False)

    def __post_init__(self):
        if not 0.0 < self.eps < 0.5:
            raise InvalidParams("BK needs 0 < eps < 1/2")
        if not 2.0 / 3.0 < self.r < 1.0:
            raise InvalidParams("BK needs 2/3 < r < 1")
        if self.J is not None and self.J < 1:
            raise InvalidParams("truncation depth J must be >= 1")

    @property
    def c(self) -> float:
        return (1.0 - self.r) / self.r

    @cached_property
    def depth(self) -> int:
        return self.J if self.J is not None else default_depth(self.r)

    def exact_lam(self, j: int) -> Fraction:
        """``lambda_j`` in rational arithmetic on the float parameters."""
        r = Fraction(self.r)
        return (1 - r) / r * r**j

    @cached_property
    def weights(self) -> np.ndarray:
        """``lambda_1..lambda_J``, each correctly rounded."""
        return np.array([float(self.exact_lam(j)) for j in range(1, self.depth + 1)])

    @property
    def residual(self) -> float:
        """Mixture mass beyond depth ``J`` (``r^J``)."""
        return float(Fraction(self.r) ** self.depth)

    @cached_property
    def windows(self) -> np.ndarray:
        return self.m.capped(self.depth)[1:]

    def lam(self, j: int) -> float:
        if 1 <= j <= self.depth:
            return float(self.weights[j - 1])
        return float(self.exact_lam(j))

    def majorities(self, x: Past) -> np.ndarray:
        """Indicators ``maj(x_{-m_j}^{-1}) = +1`` for ``j = 1..J``."""
        signs = x.signs()
        cs = np.concatenate(([0], np.cumsum(signs)))
        n = len(signs)
        m = self.windows
        inside = m <= n
        sums = np.where(inside, cs[np.minimum(m, n)], cs[n] + (m - n) * x.tail_sign())
        return sums >= 0

    def plus_prob(self, x: Past) -> float:
        ind = self.majorities(x)
        mix = float(np.dot(self.weights, ind)) + (self.residual if x.tail == PLUS else 0.0)
        return self.eps + (1.0 - 2.0 * self.eps) * mix

    def cum_vector(self, x: Past) -> np.ndarray:
        self.check_past(x)
        return np.array([1.0, self.plus_prob(x), 0.0])

    def var_bound(self, k: int) -> float:
        j0 = self.m.first_exceeding(k)
        return self.r ** (j0 - 1)

    def osc_bound(self, n: int) -> float:
        j1 = self.m.first_exceeding(n - 1)
        return 2.0 * (1.0 - 2.0 * self.eps) * self.r ** (j1 - 1)

    def strongly_non_null(self) -> bool:
        return True

    def min_prob(self) -> float:
        return self.eps

    def forward(self, x: Past, uniforms: np.ndarray) -> np.ndarray:
        from ._fast import bk_forward

        self.check_past(x)
        signs = x.signs()
        base_cs = np.concatenate(([0], np.cumsum(signs))).astype(np.int64)
        out = bk_forward(
            base_cs, x.tail_sign(), self.windows, self.weights,
            self.residual, self.eps, np.asarray(uniforms, dtype=np.float64),
        )
        return (out + 3) // 2

    def to_dict(self) -> dict:
        return {"family": "bk", "eps": self.eps, "r": self.r, "m": self.m.to_dict(), "J": self.J}


# --------------------------------------------------------------------------
# Binary autoregressive


@dataclass(frozen=True)
class XiFamily:
    """Nonnegative summable coefficients ``xi_1, xi_2, ...``.

    Kinds: ``zero``; ``geometric`` (``c rho^n``); ``power`` (``c n^-alpha``,
    tails by the Hurwitz zeta function); ``explicit`` (finite list).
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        p = self.params
        if self.kind == "geometric":
            if p[0] < 0 or not 0 <= p[1] < 1:
                raise InvalidParams("geometric xi needs c >= 0 and 0 <= rho < 1")
        elif self.kind == "power":
            if p[0] < 0 or p[1] <= 1:
                raise InvalidParams("power-law xi needs c >= 0 and alpha > 1")
        elif self.kind == "explicit":
            if any(v < 0 for v in p):
                raise InvalidParams("xi values must be nonnegative")
        elif self.kind != "zero":
            raise InvalidParams(f"unknown xi kind {self.kind!r}")

    def values(self, n: int) -> np.ndarray:
        """``xi_1..xi_n``."""
        k = np.arange(1, n + 1, dtype=np.float64)
        if self.kind == "geometric":
            c, rho = self.params
            return c * rho**k
        if self.kind == "power":
            c, alpha = self.params
            return c * k**-alpha
        if self.kind == "explicit":
            out = np.zeros(n)
            m = min(n, len(self.params))
            out[:m] = self.params[:m]
            return out
        return np.zeros(n)

    def tail(self, m: int) -> float:
        """``sum_{n > m} xi_n``."""
        if self.kind == "geometric":
            c, rho = self.params
            return c * rho ** (m + 1) / (1.0 - rho)
        if self.kind == "power":
            c, alpha = self.params
            if alpha <= 1:
                raise UnsupportedPast("power-law tail is not summable")
            return c * float(zeta(alpha, m + 1))
        if self.kind == "explicit":
            return float(sum(self.params[m:]))
        return 0.0

    def total(self) -> float:
        return self.tail(0)

    def to_dict(self) -> dict:
        if self.kind == "geometric":
            return {"kind": "geometric", "c": self.params[0], "rho": self.params[1]}
        if self.kind == "power":
            return {"kind": "power", "c": self.params[0], "alpha": self.params[1]}
        if self.kind == "explicit":
            return {"kind": "explicit", "values": list(self.params)}
        return {"kind": "zero"}

    @classmethod
    def from_dict(cls, d: dict) -> "XiFamily":
        kind = d.get("kind")
        if kind == "geometric":
            return cls("geometric", (d["c"], d["rho"]))
        if kind == "power":
            return cls("power", (d["c"], d["alpha"]))
        if kind == "explicit":
            return cls("explicit", tuple(d["values"]))
        if kind == "zero":
            return cls("zero")
        raise InvalidParams(f"unknown xi kind {kind!r}")


# psi(t) = e^t / (e^t + e^-t) for "logistic"; (1 + t) / 2 for "linear".
# Both have sup psi' = 1/2.
PSI_SLOPE = {"logistic": 0.5, "linear": 0.5}


@dataclass(frozen=True)
class AutoregressiveKernel(Kernel):
    """``P(a|x) = psi(a sum_n xi_n x_{-n} + a gamma)`` on ``{-1, +1}``."""

    xi: XiFamily
    gamma: float = 0.0
    psi: str = "logistic"
    s: int = field(default=2, init=False)
    family: str = field(default="autoregressive", init=False)

    def __post_init__(self):
        if self.gamma < 0:
            raise InvalidParams("gamma must be >= 0")
        if self.psi not in PSI_SLOPE:
            raise InvalidParams(f"unknown psi {self.psi!r}")
        if self.psi == "linear" and self.xi.total() + self.gamma >= 1:
            raise InvalidParams("linear psi needs sum(xi) + gamma < 1")

    @property
    def sensitivity(self) -> float:
        """Change of ``P(a|.)`` per unit of ``sum xi_n |x_n - y_n| / 2``."""
        return 2.0 * PSI_SLOPE[self.psi]

    def _psi(self, t: float) -> float:
        if self.psi == "logistic":
            return float(expit(2.0 * t))
        return 0.5 * (1.0 + t)

    def field_value(self, x: Past) -> float:
        signs = x.signs()
        n = len(signs)
        return float(np.dot(self.xi.values(n), signs)) + x.tail_sign() * self.xi.tail(n) + self.gamma

    def cum_vector(self, x: Past) -> np.ndarray:
        self.check_past(x)
        return np.array([1.0, self._psi(self.field_value(x)), 0.0])

    def var_bound(self, k: int) -> float:
        return self.sensitivity * self.xi.tail(k)

    def osc_bound(self, n: int) -> float:
        return 2.0 * self.sensitivity * float(self.xi.values(n)[-1])

    def strongly_non_null(self) -> bool:
        return True

    def min_prob(self) -> float:
        return self._psi(-(self.xi.total() + self.gamma))

    def forward(self, x: Past, uniforms: np.ndarray) -> np.ndarray:
        self.check_past(x)
        n = len(uniforms)
        L = len(x.prefix)
        xi = self.xi.values(n + L)
        base = x.signs().astype(np.float64)
        tail = x.tail_sign()
        gen = np.zeros(n)
        out = np.empty(n, dtype=np.int64)
        for g in range(n):
            field_ = self.gamma
            if g:
                field_ += float(np.dot(xi[:g], gen[g - 1::-1]))
            if L:
                field_ += float(np.dot(xi[g:g + L], base))
            field_ += tail * self.xi.tail(g + L)
            v = 1.0 if uniforms[g] < self._psi(field_) else -1.0
            gen[g] = v
            out[g] = PLUS if v > 0 else MINUS
        return out

    def to_dict(self) -> dict:
        return {"family": "autoregressive", "xi": self.xi.to_dict(), "gamma": self.gamma, "psi": self.psi}


# --------------------------------------------------------------------------
# Renewal kernel driven by the run length of +1's


@dataclass(frozen=True)
class PFamily:
    """Nonincreasing ``p_0, p_1, ...`` in ``[0, 1]`` with limit ``p_inf``.

    Kinds: ``constant`` (value), ``capped_power``
    (``min(cap, c / (i + shift)**beta)``, limit 0), ``capped_harmonic`` (the
    ``beta = 1`` case) and ``explicit`` (values, then ``limit``).
    """

    kind: str
    params: tuple = ()
    limit_value: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind == "constant":
            (v,) = self.params
            if not 0 <= v <= 1:
                raise InvalidParams("p must lie in [0, 1]")
        elif self.kind == "capped_harmonic":
            object.__setattr__(self, "kind", "capped_power")
            object.__setattr__(self, "params", self.params + (1.0,))
            self.__post_init__()
        elif self.kind == "capped_power":
            cap, c, shift, beta = self.params
            if not (0 <= cap <= 1 and c >= 0 and shift >= 0 and beta > 0):
                raise InvalidParams("capped_power needs cap in [0,1], c >= 0, shift >= 0, beta > 0")
        elif self.kind == "explicit":
            vals = self.params
            lim = self.limit_value if self.limit_value is not None else vals[-1]
            seq = list(vals) + [lim]
            if any(not 0 <= v <= 1 for v in seq):
                raise InvalidParams("p must lie in [0, 1]")
            if any(b > a for a, b in zip(seq, seq[1:])):
                raise InvalidParams("p must be nonincreasing")
        else:
            raise InvalidParams(f"unknown p kind {self.kind!r}")

    def __call__(self, i: float) -> float:
        if i == math.inf:
            return self.limit
        i = int(i)
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "capped_power":
            cap, c, shift, beta = self.params
            if i + shift == 0:
                return cap
            return min(cap, c / (i + shift) ** beta)
        vals = self.params
        return vals[i] if i < len(vals) else self.limit

    def values(self, n: int) -> np.ndarray:
        """``p_0..p_{n-1}``."""
        if self.kind == "constant":
            return np.full(n, self.params[0])
        if self.kind == "capped_power":
            cap, c, shift, beta = self.params
            base = np.arange(n, dtype=np.float64) + shift
            with np.errstate(divide="ignore"):
                raw = np.where(base > 0, c / np.where(base > 0, base, 1.0) ** beta, np.inf)
            return np.minimum(cap, raw)
        out = np.full(n, self.limit)
        m = min(n, len(self.params))
        out[:m] = self.params[:m]
        return out

    @property
    def limit(self) -> float:
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "capped_power":
            return 0.0
        return self.limit_value if self.limit_value is not None else self.params[-1]

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.params[0]}
        if self.kind == "capped_power":
            cap, c, shift, beta = self.params
            return {"kind": "capped_power", "cap": cap, "c": c, "shift": shift, "beta": beta}
        return {"kind": "explicit", "values": list(self.params), "limit": self.limit}

    @classmethod
    def from_dict(cls, d: dict) -> "PFamily":
        kind = d.get("kind")
        if kind == "constant":
            return cls("constant", (d["value"],))
        if kind == "capped_harmonic":
            return cls("capped_harmonic", (d["cap"], d["c"], d["shift"]))
        if kind == "capped_power":
            return cls("capped_power", (d["cap"], d["c"], d["shift"], d.get("beta", 1.0)))
        if kind == "explicit":
            return cls("explicit", tuple(d["values"]), d.get("limit"))
        raise InvalidParams(f"unknown p kind {kind!r}")


@dataclass(frozen=True)
class RenewalKernel(Kernel):
    """``P(-1|x) = p_{ell(x)}``; renewal chains are concatenations of
    blocks ``(-1, +1, ..., +1)``."""

    p: PFamily
    s: int = field(default=2, init=False)
    family: str = field(default="renewal", init=False)
    var_exact: bool = field(default=True, init=False)
    osc_exact: bool = field(default=True, init=False)

    def cum_vector(self, x: Past) -> np.ndarray:
        self.check_past(x)
        return np.array([1.0, 1.0 - self.p(ell(x)), 0.0])

    def var_bound(self, k: int) -> float:
        return self.p(k) - self.p.limit

    def osc_bound(self, n: int) -> float:
        return 2.0 * (self.p(n - 1) - self.p.limit)

    def strongly_non_null(self) -> bool:
        return 0.0 < self.p.limit and self.p(0) < 1.0

    def min_prob(self) -> float:
        return min(self.p.limit, 1.0 - self.p(0))

    def forward(self, x: Past, uniforms: np.ndarray) -> np.ndarray:
        self.check_past(x)
        run = ell(x)
        out = np.empty(len(uniforms), dtype=np.int64)
        for t, w in enumerate(uniforms):
            if w < 1.0 - self.p(run):
                out[t] = PLUS
                run = run + 1
            else:
                out[t] = MINUS
                run = 0
        return out

    def to_dict(self) -> dict:
        return {"family": "renewal", "p": self.p.to_dict()}


# --------------------------------------------------------------------------
# Finite-order Markov


@dataclass(frozen=True, eq=False)
class FiniteMarkovKernel(Kernel):
    """Order-``k0`` chain on ``{1..s}``.

    ``table[i]`` is the law of ``x_0`` given the history encoded by
    :func:`~gmeasure.past.history_index` (``x_{-1}`` least significant).
    """

    s: int
    order: int
    table: np.ndarray
    family: str = field(default="markov", init=False)
    var_exact: bool = field(default=True, init=False)
    osc_exact: bool = field(default=True, init=False)

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64)
        if self.s < 2 or self.order < 0:
            raise InvalidParams("markov needs s >= 2 and order >= 0")
        if t.shape != (self.s**self.order, self.s):
            raise InvalidParams(f"table must have shape {(self.s**self.order, self.s)}")
        if np.any(t < 0) or np.max(np.abs(t.sum(axis=1) - 1.0)) > 1e-12:
            raise InvalidParams("table rows must be probability vectors")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @cached_property
    def cum_table(self) -> np.ndarray:
        """Rows ``[cum(1), ..., cum(s), 0]`` per history."""
        rev = np.cumsum(self.table[:, ::-1], axis=1)[:, ::-1]
        out = np.zeros((len(self.table), self.s + 1))
        out[:, : self.s] = rev
        out[:, 0] = 1.0
        return out

    def row_index(self, x: Past) -> int:
        return history_index(x.head(self.order), self.s)

    def cum_vector(self, x: Past) -> np.ndarray:
        self.check_past(x)
        return self.cum_table[self.row_index(x)].copy()

    def _cube(self) -> np.ndarray:
        # axis i of the cube is digit order-1-i, i.e. coordinate x_{-(order-i)}
        return self.table.reshape((self.s,) * self.order + (self.s,))

    def var_bound(self, k: int) -> float:
        if k >= self.order:
            return 0.0
        t = self.table.reshape(self.s ** (self.order - k), self.s**k, self.s)
        return float(np.max(t.max(axis=0) - t.min(axis=0)))

    def osc_bound(self, n: int) -> float:
        if n > self.order:
            return 0.0
        cube = self._cube()
        axis = self.order - n
        spread = cube.max(axis=axis) - cube.min(axis=axis)
        per_symbol = spread.reshape(-1, self.s).max(axis=0)
        return float(per_symbol.sum())

    @cached_property
    def attractive(self) -> bool:  # type: ignore[override]
        if self.order == 0:
            return True
        ct = self.cum_table
        idx = np.arange(self.s**self.order)
        for i in range(self.order):
            digit = (idx // self.s**i) % self.s
            up = idx[digit < self.s - 1]
            if np.any(ct[up] > ct[up + self.s**i] + 1e-12):
                return False
        return True

    def strongly_non_null(self) -> bool:
        return bool(np.all(self.table > 0))

    def min_prob(self) -> float:
        return float(self.table.min())

    def forward(self, x: Past, uniforms: np.ndarray) -> np.ndarray:
        self.check_past(x)
        idx = self.row_index(x)
        mod = self.s**self.order
        ct = self.cum_table
        out = np.empty(len(uniforms), dtype=np.int64)
        for t, w in enumerate(uniforms):
            a = int(np.count_nonzero(ct[idx, :-1] > w))
            out[t] = a
            if self.order:
                idx = (idx * self.s + a - 1) % mod
        return out

    def to_dict(self) -> dict:
        return {"family": "markov", "s": self.s, "order": self.order, "table": self.table.tolist()}


def two_state_markov(p_stay_top: float, p_up_from_bottom: float) -> FiniteMarkovKernel:
    """Binary order-1 chain with ``P(2|2) = p_stay_top`` and ``P(2|1) = p_up_from_bottom``."""
    table = [[1 - p_up_from_bottom, p_up_from_bottom], [1 - p_stay_top, p_stay_top]]
    return FiniteMarkovKernel(2, 1, np.array(table))


# --------------------------------------------------------------------------
# JSON


def kernel_from_dict(d: dict) -> Kernel:
    if not isinstance(d, dict) or "family" not in d:
        raise InvalidParams("kernel config must be an object with a 'family' field")
    fam = d["family"]
    try:
        if fam == "bk":
            m = d.get("m", {"rule": "arithmetic", "start": 1, "step": 2})
            return BKKernel(float(d["eps"]), float(d["r"]), WindowSequence.from_dict(m), d.get("J"))
        if fam == "autoregressive":
            return AutoregressiveKernel(
                XiFamily.from_dict(d["xi"]), float(d.get("gamma", 0.0)), d.get("psi", "logistic")
            )
        if fam == "renewal":
            return RenewalKernel(PFamily.from_dict(d["p"]))
        if fam == "markov":
            return FiniteMarkovKernel(int(d["s"]), int(d["order"]), np.asarray(d["table"], dtype=float))
    except KeyError as exc:
        raise InvalidParams(f"kernel config for {fam!r} is missing {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParams):
            raise
        raise InvalidParams(f"bad kernel config for {fam!r}: {exc}") from None
    raise InvalidParams(f"unknown kernel family {fam!r}")
