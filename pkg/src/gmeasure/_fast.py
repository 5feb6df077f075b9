"""Compiled inner loops for forward simulation and backward coalescence search.

Binary BK code works on +-1 signs. Label codes for the BK partition:
``-1`` is the cell (-1, -1), ``-2`` the cell (+1, +1), ``k >= 1`` the
majority rule over window ``m_k``.

Every backward search returns a status: 0 coalesced, 1 needs labels older
than the supplied range, 2 horizon exceeded.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OK, NEED_DEEPER, EXCEEDED, RESIDUAL = 0, 1, 2, 3


@njit(cache=True, nogil=True)
def bk_forward(base_cs, tail, windows, weights, residual, eps, uniforms):
    n = uniforms.shape[0]
    L = base_cs.shape[0] - 1
    J = windows.shape[0]
    # suffix[j] = sum of weights[j:], plus the mass beyond depth J
    suffix = np.empty(J + 1)
    suffix[J] = residual
    for j in range(J - 1, -1, -1):
        suffix[j] = suffix[j + 1] + weights[j]
    gcs = np.zeros(n + 1, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    for g in range(n):
        avail = g + L
        mix = 0.0
        j = 0
        while j < J and windows[j] <= 2 * avail + 1:
            m = windows[j]
            if m <= g:
                ssum = gcs[g] - gcs[g - m]
            else:
                q = m - g
                if q <= L:
                    ssum = gcs[g] + base_cs[q]
                else:
                    ssum = gcs[g] + base_cs[L] + (q - L) * tail
            if ssum >= 0:
                mix += weights[j]
            j += 1
        # remaining windows are longer than twice the known history: tail decides
        if tail > 0:
            mix += suffix[j]
        p_plus = eps + (1.0 - 2.0 * eps) * mix
        v = 1 if uniforms[g] < p_plus else -1
        out[g] = v
        gcs[g + 1] = gcs[g] + v
    return out


@njit(cache=True, nogil=True)
def bk_codes(u, eps, log_r, kmax):
    out = np.empty(u.shape[0], dtype=np.int64)
    for t in range(u.shape[0]):
        w = u[t]
        if w < eps:
            out[t] = -1
        elif w < 2.0 * eps:
            out[t] = -2
        else:
            v = (w - 2.0 * eps) / (1.0 - 2.0 * eps)
            k = int(np.floor(np.log1p(-v) / log_r)) + 1
            if k < 1:
                k = 1
            if k > kmax:
                k = kmax
            out[t] = k
    return out


@njit(cache=True, nogil=True)
def bk_run_pair(codes, first, last, windows, csl, csr):
    """Run the extremal pair over label indices ``first..last``.

    Returns (left sign, right sign, order violations)."""
    csl[0] = 0
    csr[0] = 0
    a = -1
    b = 1
    viol = 0
    for t in range(first, last + 1):
        g = t - first
        c = codes[t]
        if c == -1:
            a = -1
            b = -1
        elif c == -2:
            a = 1
            b = 1
        else:
            m = windows[c]
            if m <= g:
                sl = csl[g] - csl[g - m]
                sr = csr[g] - csr[g - m]
            else:
                sl = csl[g] - (m - g)
                sr = csr[g] + (m - g)
            a = 1 if sl >= 0 else -1
            b = 1 if sr >= 0 else -1
        if a > b:
            viol += 1
        csl[g + 1] = csl[g] + a
        csr[g + 1] = csr[g] + b
    return a, b, viol


@njit(cache=True, nogil=True)
def bk_theta(codes, lo, i, horizon, windows, csl, csr):
    """Backward search at time ``i``; label index of time t is ``t - lo``.

    Returns (status, theta, sign, violations, runs)."""
    viol = 0
    runs = 0
    j = 0
    fail = -1
    sign = 0
    while True:
        if i - j < lo:
            return NEED_DEEPER, j, 0, viol, runs
        a, b, v = bk_run_pair(codes, i - j - lo, i - lo, windows, csl, csr)
        viol += v
        runs += 1
        if a == b:
            sign = a
            break
        fail = j
        if j >= horizon:
            return EXCEEDED, j, 0, viol, runs
        j = 1 if j == 0 else min(2 * j, horizon)
    hi = j
    while hi - fail > 1:
        mid = (hi + fail) // 2
        a, b, v = bk_run_pair(codes, i - mid - lo, i - lo, windows, csl, csr)
        viol += v
        runs += 1
        if a == b:
            hi = mid
            sign = a
        else:
            fail = mid
    return OK, hi, sign, viol, runs


@njit(cache=True, nogil=True)
def bk_window(codes, lo, n, horizon, windows, start):
    """Backward searches for positions ``start..n-1``.

    Stops at the first position that is not OK and reports it."""
    size = codes.shape[0] + 2
    csl = np.empty(size, dtype=np.int64)
    csr = np.empty(size, dtype=np.int64)
    thetas = np.zeros(n, dtype=np.int64)
    signs = np.zeros(n, dtype=np.int64)
    viol = 0
    runs = 0
    for i in range(start, n):
        st, th, sg, v, r = bk_theta(codes, lo, i, horizon, windows, csl, csr)
        viol += v
        runs += r
        if st != OK:
            return st, i, th, thetas, signs, viol, runs
        thetas[i] = th
        signs[i] = sg
    return OK, n, 0, thetas, signs, viol, runs


@njit(cache=True, nogil=True)
def bk_theta_many(codes_rows, horizon, windows):
    """Theta at the last time of each row (rows hold times -horizon..0).

    Censored rows get -1."""
    R = codes_rows.shape[0]
    size = codes_rows.shape[1] + 2
    csl = np.empty(size, dtype=np.int64)
    csr = np.empty(size, dtype=np.int64)
    out = np.empty(R, dtype=np.int64)
    viol = 0
    for rep in range(R):
        st, th, sg, v, r = bk_theta(codes_rows[rep], -horizon, 0, horizon, windows, csl, csr)
        viol += v
        out[rep] = th if st == OK else -1
    return out, viol


# --------------------------------------------------------------------------
# Table-driven hybrid decompositions (generic finite alphabet)


@njit(cache=True, nogil=True)
def _cell(thr, off, u, ncell):
    # first cell whose cumulative threshold exceeds u
    lo = 0
    hi = ncell - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if thr[off + mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True, nogil=True)
def hybrid_run_pair(levels, us, first, last, thr, offsets, s, K):
    """Extremal pair over label indices ``first..last``.

    ``levels[t] = -1`` marks a residual label. Returns
    (left, right, violations, status) with status RESIDUAL if one was met."""
    sK = 1
    for _ in range(K):
        sK *= s
    hl = 0
    hr = sK - 1
    a = 1
    b = s
    viol = 0
    ncell = s * s
    for t in range(first, last + 1):
        k = levels[t]
        if k < 0:
            return a, b, viol, RESIDUAL
        sk = 1
        for _ in range(k):
            sk *= s
        pair = (hl % sk) * sk + (hr % sk)
        c = _cell(thr, offsets[k] + pair * ncell, us[t], ncell)
        a = c // s + 1
        b = c % s + 1
        if a > b:
            viol += 1
        if K > 0:
            hl = (hl * s + a - 1) % sK
            hr = (hr * s + b - 1) % sK
    return a, b, viol, OK


@njit(cache=True, nogil=True)
def hybrid_theta(levels, us, lo, i, horizon, thr, offsets, s, K):
    """As :func:`bk_theta`; RESIDUAL means the caller must resolve exactly."""
    viol = 0
    runs = 0
    j = 0
    fail = -1
    sym = 0
    while True:
        if i - j < lo:
            return NEED_DEEPER, j, 0, viol, runs
        a, b, v, st = hybrid_run_pair(levels, us, i - j - lo, i - lo, thr, offsets, s, K)
        if st == RESIDUAL:
            return RESIDUAL, j, 0, viol, runs
        viol += v
        runs += 1
        if a == b:
            sym = a
            break
        fail = j
        if j >= horizon:
            return EXCEEDED, j, 0, viol, runs
        j = 1 if j == 0 else min(2 * j, horizon)
    hi = j
    while hi - fail > 1:
        mid = (hi + fail) // 2
        a, b, v, st = hybrid_run_pair(levels, us, i - mid - lo, i - lo, thr, offsets, s, K)
        viol += v
        runs += 1
        if a == b:
            hi = mid
            sym = a
        else:
            fail = mid
    return OK, hi, sym, viol, runs
