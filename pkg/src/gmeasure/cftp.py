"""Coupling from the past for attractive kernels.

The update function maps a pair of pasts and one label to a pair of symbols.
Starting the pair at ``(1, s)`` (constant pasts) ``j`` steps before time
``i`` and iterating with the shared labels gives ``F_[i-j, i]``; the stopping
time ``theta[i]`` is the least ``j`` for which both coordinates agree at
time ``i``, and that common symbol is the sample. Depths are searched by
doubling and then bisection; the absorbing property of coalescence under
monotone updates makes the bisection exact.

Every window position is computed literally from the extremal pair, and
all positions share one label stream, so the window is jointly stationary.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _fast
from .decomposition import (
    BKDecomposition,
    Decomposition,
    GreedyDecomposition,
    Label,
    UpdateDiagnostics,
)
from .errors import HorizonExceeded, InvalidParams
from .kernels import BKKernel, Kernel
from .past import Past, PairPast
from .stream import LabelStream, replica_seed

DEFAULT_HORIZON = 10_000
INITIAL_DEPTH = 64


@dataclass
class CftpRun:
    window: np.ndarray
    theta: np.ndarray
    labels_consumed: int
    seed: int
    horizon_limit: int
    diagnostics: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        rows = ["time,symbol,theta"]
        rows += [f"{i},{int(a)},{int(t)}" for i, (a, t) in enumerate(zip(self.window, self.theta))]
        return "\n".join(rows) + "\n"

    def to_report(self) -> dict:
        return {
            "seed": self.seed,
            "n": int(len(self.window)),
            "horizon_limit": self.horizon_limit,
            "labels_consumed": self.labels_consumed,
            "theta_max": int(self.theta.max()) if len(self.theta) else 0,
            "theta_mean": float(self.theta.mean()) if len(self.theta) else 0.0,
            "diagnostics": dict(self.diagnostics),
        }


# --------------------------------------------------------------------------
# Exact (pure Python) path


def update_F(dec: Decomposition, pp: PairPast, label: Label, diagnostics: UpdateDiagnostics | None = None,
             strict: bool = False) -> tuple[int, int]:
    return dec.update(pp, label, diagnostics, strict)


def iterate_path(dec: Decomposition, start: PairPast, labels: Sequence[Label],
                 diagnostics: UpdateDiagnostics | None = None) -> list[tuple[int, int]]:
    """Successive outputs of the update function, oldest label first."""
    out = []
    left, right = start.left, start.right
    for label in labels:
        a, b = dec.update(PairPast(left, right), label, diagnostics)
        out.append((a, b))
        left, right = left.extend(a), right.extend(b)
    return out


def iterate(dec: Decomposition, start: PairPast, labels: Sequence[Label],
            diagnostics: UpdateDiagnostics | None = None) -> tuple[int, int]:
    if not labels:
        raise InvalidParams("iterate needs at least one label")
    return iterate_path(dec, start, labels, diagnostics)[-1]


def _labels(dec: Decomposition, stream: LabelStream, t0: int, t1: int) -> list[Label]:
    """Labels for times ``t0..t1`` inclusive."""
    return [dec.label_from_uniforms(u) for u in stream.uniforms(t0, t1 + 1)]


def _python_theta(dec: Decomposition, stream: LabelStream, i: int, horizon: int,
                  diag: UpdateDiagnostics, counters: dict) -> tuple[int, int]:
    cache: dict[int, list[Label]] = {}

    def labels_from(j: int) -> list[Label]:
        if j not in cache:
            cache[j] = _labels(dec, stream, i - j, i)
        return cache[j]

    def run(j: int) -> tuple[int, int]:
        path = iterate_path(dec, PairPast.extremal(dec.s), labels_from(j), diag)
        counters["runs"] += 1
        counters["order_violations"] += sum(1 for a, b in path if a > b)
        return path[-1]

    j, fail = 0, -1
    while True:
        a, b = run(j)
        if a == b:
            sym = a
            break
        fail = j
        if j >= horizon:
            raise HorizonExceeded(horizon, i)
        j = 1 if j == 0 else min(2 * j, horizon)
    hi = j
    while hi - fail > 1:
        mid = (hi + fail) // 2
        a, b = run(mid)
        if a == b:
            hi, sym = mid, a
        else:
            fail = mid
    return hi, sym


# --------------------------------------------------------------------------
# Window engines


def _prepare(dec: Decomposition) -> None:
    if isinstance(dec, GreedyDecomposition):
        dec.require_monotone()


def _bk_inputs(dec: BKDecomposition, stream: LabelStream, lo: int, hi: int) -> np.ndarray:
    u = stream.uniforms(lo, hi + 1)[:, 0]
    return _fast.bk_codes(u, dec.eps, math.log(dec.kernel.r), dec.kmax)


def _hybrid_inputs(dec: GreedyDecomposition, stream: LabelStream, lo: int, hi: int):
    u = stream.uniforms(lo, hi + 1)
    levels = np.searchsorted(dec.cum_weights, u[:, 0], side="right").astype(np.int64)
    levels[levels > dec.K] = -1
    return levels, np.ascontiguousarray(u[:, 1])


def _window(dec: Decomposition, stream: LabelStream, n: int, horizon: int, seed: int) -> CftpRun:
    if n < 1:
        raise InvalidParams("window length must be >= 1")
    if horizon < 0:
        raise InvalidParams("horizon must be >= 0")
    thetas = np.zeros(n, dtype=np.int64)
    window = np.zeros(n, dtype=np.int64)
    diag = UpdateDiagnostics()
    counters = {"runs": 0, "order_violations": 0, "python_fallbacks": 0}
    depth = min(horizon, INITIAL_DEPTH)
    pos = 0

    def partial(at: int) -> CftpRun:
        return _finish(window[:at], thetas[:at], seed, horizon, diag, counters, n)

    while pos < n:
        if isinstance(dec, BKDecomposition):
            codes = _bk_inputs(dec, stream, -depth, n - 1)
            st, stop, th, t_arr, s_arr, v, runs = _fast.bk_window(codes, -depth, n, horizon, dec.windows, pos)
            window[pos:stop] = (s_arr[pos:stop] + 3) // 2
        elif isinstance(dec, GreedyDecomposition):
            levels, us = _hybrid_inputs(dec, stream, -depth, n - 1)
            thr, off = dec.flat_thresholds
            st, stop, t_arr, s_arr, v, runs = _hybrid_window(levels, us, -depth, n, horizon, thr, off, dec.s, dec.K, pos)
            window[pos:stop] = s_arr[pos:stop]
        else:
            raise InvalidParams(f"no sampler for {type(dec).__name__}")
        thetas[pos:stop] = t_arr[pos:stop]
        counters["runs"] += int(runs)
        counters["order_violations"] += int(v)
        pos = stop
        if st == _fast.OK:
            break
        if st == _fast.NEED_DEEPER:
            depth = min(2 * depth, horizon)
        elif st == _fast.EXCEEDED:
            raise HorizonExceeded(horizon, pos, partial(pos))
        elif st == _fast.RESIDUAL:
            counters["python_fallbacks"] += 1
            try:
                thetas[pos], window[pos] = _python_theta(dec, stream, pos, horizon, diag, counters)
            except HorizonExceeded as exc:
                raise HorizonExceeded(horizon, pos, partial(pos)) from exc
            pos += 1
    return _finish(window, thetas, seed, horizon, diag, counters, n)


def _hybrid_window(levels, us, lo, n, horizon, thr, off, s, K, start):
    thetas = np.zeros(n, dtype=np.int64)
    syms = np.zeros(n, dtype=np.int64)
    viol = runs = 0
    for i in range(start, n):
        st, th, sym, v, r = _fast.hybrid_theta(levels, us, lo, i, horizon, thr, off, s, K)
        viol += v
        runs += r
        if st != _fast.OK:
            return st, i, thetas, syms, viol, runs
        thetas[i], syms[i] = th, sym
    return _fast.OK, n, thetas, syms, viol, runs


def _finish(window, thetas, seed, horizon, diag, counters, n) -> CftpRun:
    consumed = int(n - min((i - t for i, t in enumerate(thetas)), default=0)) if len(thetas) else 0
    diagnostics = {
        "residual_labels": diag.residual_labels,
        "bias_events": diag.bias_events,
        "bias_bound": diag.bias_bound,
        "order_violations": counters["order_violations"],
        "backward_runs": counters["runs"],
        "python_fallbacks": counters["python_fallbacks"],
        "max_refinement_depth": int(thetas.max()) if len(thetas) else 0,
    }
    return CftpRun(window.copy(), thetas.copy(), consumed, seed, horizon, diagnostics)


# --------------------------------------------------------------------------
# Public sampling API


def sample_stationary(dec: Decomposition, n: int, seed: int, horizon_limit: int = DEFAULT_HORIZON) -> CftpRun:
    """Exact stationary window of length ``n`` at times ``0..n-1``."""
    _prepare(dec)
    return _window(dec, LabelStream(seed), n, horizon_limit, seed)


def coalesce(dec: Decomposition, stream: LabelStream, at: int = 0,
             horizon_limit: int = DEFAULT_HORIZON) -> tuple[int, int]:
    """``(theta, symbol)`` at time ``at``; raises :class:`HorizonExceeded`."""
    _prepare(dec)
    if at < 0:
        raise InvalidParams("time index must be >= 0")
    run = _window_at(dec, stream, at, horizon_limit)
    return run


def _window_at(dec, stream, at, horizon):
    # a window of length at + 1 computes position ``at`` from the same stream
    shifted = _ShiftedStream(stream, at)
    run = _window(dec, shifted, 1, horizon, stream.seed)
    return int(run.theta[0]), int(run.window[0])


class _ShiftedStream:
    def __init__(self, stream: LabelStream, shift: int):
        self.stream, self.shift, self.seed = stream, shift, stream.seed

    def uniforms(self, t0, t1):
        return self.stream.uniforms(t0 + self.shift, t1 + self.shift)

    def at(self, t):
        return self.stream.at(t + self.shift)


def theta(dec: Decomposition, stream: LabelStream, at: int = 0, horizon_limit: int = DEFAULT_HORIZON) -> int:
    return coalesce(dec, stream, at, horizon_limit)[0]


def forward_fixed_past(kernel: Kernel, x: Past, n: int, seed: int) -> np.ndarray:
    """``n`` symbols of the chain run from the fixed past ``x``."""
    if n < 0:
        raise InvalidParams("n must be >= 0")
    u = LabelStream(seed).uniforms(0, n)[:, 0]
    return kernel.forward(x, u)


# --------------------------------------------------------------------------
# Replicated experiments


def _map_chunks(fn: Callable, replicas: int, workers: int, *args) -> list:
    """Run ``fn(first, last, *args)`` over contiguous replica chunks, in order."""
    if replicas < 1:
        raise InvalidParams("replicas must be >= 1")
    workers = max(1, int(workers))
    bounds = np.linspace(0, replicas, min(workers * 4, replicas) + 1).astype(int) if workers > 1 else [0, replicas]
    chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers == 1:
        return [fn(a, b, *args) for a, b in chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, a, b, *args) for a, b in chunks]
        return [f.result() for f in futures]


def _theta_chunk(first, last, dec, seed, horizon):
    out = np.empty(last - first, dtype=np.int64)
    viol = 0
    for k, rep in enumerate(range(first, last)):
        stream = LabelStream(replica_seed(seed, rep))
        try:
            run = _window(dec, stream, 1, horizon, stream.seed)
            out[k] = run.theta[0]
            viol += run.diagnostics["order_violations"]
        except HorizonExceeded:
            out[k] = -1
    return out, viol


@dataclass
class ThetaSample:
    """Stopping times at time 0 of independent replicas; ``-1`` is censored."""

    values: np.ndarray
    horizon: int
    order_violations: int

    @property
    def censored(self) -> int:
        return int(np.count_nonzero(self.values < 0))

    def histogram(self) -> dict[str, int]:
        vals, counts = np.unique(self.values, return_counts=True)
        return {("censored" if v < 0 else str(int(v))): int(c) for v, c in zip(vals, counts)}


def theta_samples(dec: Decomposition, replicas: int, seed: int, horizon_limit: int = DEFAULT_HORIZON,
                  workers: int = 1) -> ThetaSample:
    _prepare(dec)
    parts = _map_chunks(_theta_chunk, replicas, workers, dec, seed, horizon_limit)
    values = np.concatenate([p[0] for p in parts])
    return ThetaSample(values, horizon_limit, int(sum(p[1] for p in parts)))


@dataclass
class CoalescenceCurve:
    """``survival[n]`` estimates ``P(theta > n)`` for ``n = 0..n_max``."""

    survival: np.ndarray
    stderr: np.ndarray
    replicas: int
    censored: int

    def at(self, n: int) -> float:
        return float(self.survival[n])


def coalescence_curve(dec: Decomposition, n_max: int, replicas: int, seed: int, workers: int = 1) -> CoalescenceCurve:
    """Survival function of the stopping time at time 0, censored at ``n_max``."""
    ts = theta_samples(dec, replicas, seed, n_max, workers)
    th = np.where(ts.values < 0, n_max + 1, ts.values)
    counts = np.bincount(th, minlength=n_max + 2)
    # P(theta > n) = 1 - P(theta <= n)
    survival = 1.0 - np.cumsum(counts)[: n_max + 1] / replicas
    survival = np.clip(survival, 0.0, 1.0)
    stderr = np.sqrt(survival * (1 - survival) / replicas)
    return CoalescenceCurve(survival, stderr, replicas, ts.censored)


def _extremal_forward(kernel: Kernel, n: int, stream: LabelStream) -> tuple[np.ndarray, np.ndarray]:
    u = stream.uniforms(0, n)[:, 0]
    return kernel.forward(Past.minimal(), u), kernel.forward(Past.maximal(kernel.s), u)


def _phase_chunk(first, last, kernel, n, seed):
    low = np.empty(last - first, dtype=np.int64)
    high = np.empty(last - first, dtype=np.int64)
    viol = 0
    for k, rep in enumerate(range(first, last)):
        lo, hi = _extremal_forward(kernel, n, LabelStream(replica_seed(seed, rep)))
        low[k], high[k] = lo[-1], hi[-1]
        viol += int(np.count_nonzero(lo > hi))
    return low, high, viol


@dataclass
class PhaseGap:
    gap: float
    stderr: float
    top_from_min: float
    top_from_max: float
    replicas: int
    order_violations: int

    def __float__(self) -> float:
        return self.gap


def phase_gap(kernel: Kernel, n: int, replicas: int, seed: int, workers: int = 1) -> PhaseGap:
    """Estimate ``E[X_n from s] - E[X_n from 1]`` under shared uniforms.

    ``n = 0`` refers to the fixed pasts themselves, so the gap is ``s - 1``.
    """
    if n < 0:
        raise InvalidParams("n must be >= 0")
    s = kernel.s
    if n == 0:
        return PhaseGap(float(s - 1), 0.0, 0.0, 1.0, replicas, 0)
    parts = _map_chunks(_phase_chunk, replicas, workers, kernel, n, seed)
    low = np.concatenate([p[0] for p in parts])
    high = np.concatenate([p[1] for p in parts])
    d = (high - low).astype(np.float64)
    sd = float(d.std(ddof=1)) if replicas > 1 else 0.0
    return PhaseGap(
        float(d.mean()), sd / math.sqrt(replicas),
        float(np.mean(low == s)), float(np.mean(high == s)),
        replicas, int(sum(p[2] for p in parts)),
    )


def one_step_gap(kernel: Kernel) -> float:
    """Exact ``sum_a a (P(a | s) - P(a | 1))``."""
    a = np.arange(1, kernel.s + 1)
    return float(a @ (kernel.prob_vector(Past.maximal(kernel.s)) - kernel.prob_vector(Past.minimal())))


def _window_chunk(first, last, dec, n, seed, horizon):
    wins = np.empty((last - first, n), dtype=np.int64)
    ths = np.empty((last - first, n), dtype=np.int64)
    viol = 0
    for k, rep in enumerate(range(first, last)):
        rs = replica_seed(seed, rep)
        try:
            run = _window(dec, LabelStream(rs), n, horizon, rs)
        except HorizonExceeded as exc:
            exc.replica = rep
            raise
        wins[k], ths[k] = run.window, run.theta
        viol += run.diagnostics["order_violations"]
    return wins, ths, viol


def sample_windows(dec: Decomposition, n: int, replicas: int, seed: int,
                   horizon_limit: int = DEFAULT_HORIZON, workers: int = 1):
    """Independent stationary windows; returns ``(windows, thetas, order_violations)``."""
    _prepare(dec)
    parts = _map_chunks(_window_chunk, replicas, workers, dec, n, seed, horizon_limit)
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]),
            int(sum(p[2] for p in parts)))
