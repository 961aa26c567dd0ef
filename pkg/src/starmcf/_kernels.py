"""Compiled stencils for the time loop.

These mirror ``flow.rhs`` and ``geometry.compute_fields`` node by node; the
test suite checks them against the numpy versions.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _neighbors(n, v, i):
    N = v.size
    if n == 1:
        return v[i - 1] if i > 0 else v[N - 1], v[i + 1] if i < N - 1 else v[0]
    lo = v[i - 1] if i > 0 else v[1]
    hi = v[i + 1] if i < N - 1 else v[N - 2]
    return lo, hi


@njit(cache=True)
def _node_geometry(n, v, i, h, cot):
    """(dv, w2, k1, k2) at node i; k2 = 0 for n = 1."""
    lo, hi = _neighbors(n, v, i)
    dv = (hi - lo) / (2.0 * h)
    d2v = (hi - 2.0 * v[i] + lo) / (h * h)
    w2 = 1.0 + dv * dv
    e = math.exp(-v[i])
    k1 = e * (w2 - d2v) / (w2 * math.sqrt(w2))
    k2 = 0.0
    if n == 2:
        N = v.size
        c = d2v if (i == 0 or i == N - 1) else dv * cot[i]
        k2 = e * (1.0 - c) / math.sqrt(w2)
    return dv, w2, k1, k2


@njit(cache=True)
def rhs_into(n, v, h, cot, out):
    for i in range(v.size):
        dv, w2, k1, k2 = _node_geometry(n, v, i, h, cot)
        out[i] = -(k1 + k2) * math.exp(-v[i]) * math.sqrt(w2)


@njit(cache=True)
def rk4(n, v, dt, h, cot):
    N = v.size
    k1 = np.empty(N)
    k2 = np.empty(N)
    k3 = np.empty(N)
    k4 = np.empty(N)
    tmp = np.empty(N)
    rhs_into(n, v, h, cot, k1)
    for i in range(N):
        tmp[i] = v[i] + 0.5 * dt * k1[i]
    rhs_into(n, tmp, h, cot, k2)
    for i in range(N):
        tmp[i] = v[i] + 0.5 * dt * k2[i]
    rhs_into(n, tmp, h, cot, k3)
    for i in range(N):
        tmp[i] = v[i] + dt * k3[i]
    rhs_into(n, tmp, h, cot, k4)
    out = np.empty(N)
    for i in range(N):
        out[i] = v[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return out


@njit(cache=True)
def summary(n, v, h, cot, sin):
    """f_max, f_min, H_max, A2_max, area, max |grad v|^2; NaN-poisoned on failure."""
    f_max = -np.inf
    f_min = np.inf
    H_max = -np.inf
    A2_max = -np.inf
    area = 0.0
    g_max = 0.0
    for i in range(v.size):
        dv, w2, k1, k2 = _node_geometry(n, v, i, h, cot)
        r = math.exp(v[i])
        w = math.sqrt(w2)
        f = w / r
        H = k1 + k2
        A2 = k1 * k1 + k2 * k2
        if not (math.isfinite(f) and math.isfinite(H)):
            return np.nan, np.nan, np.nan, np.nan, np.nan, np.nan
        f_max = max(f_max, f)
        f_min = min(f_min, f)
        H_max = max(H_max, H)
        A2_max = max(A2_max, A2)
        g_max = max(g_max, dv * dv)
        if n == 1:
            area += r * w * h
        else:
            area += r * sin[i] * r * w * 2.0 * math.pi * h
    return f_max, f_min, H_max, A2_max, area, g_max


# status codes for advance()
REACHED, BLOWUP, LOST, BUFFER_FULL = 0, 1, 2, 3


@njit(cache=True)
def advance(n, v, t, target, h, cot, sin, cfl, threshold, rows, start, stats):
    """Step from ``t`` to exactly ``target`` unless blow-up or failure intervenes.

    Writes (t, dt, f_max, f_min, H_max, A2_max, area) rows into ``rows``
    from index ``start``; ``stats`` holds the summary of the current ``v``.
    Returns (v, t, next_row, status, stats).
    """
    k = start
    while True:
        if k >= rows.shape[0]:
            return v, t, k, BUFFER_FULL, stats
        r_min = math.exp(v.min())
        dt = cfl * (h * r_min) ** 2 / (1.0 + stats[5])
        landing = t + dt >= target * (1.0 - 1e-13)
        if landing:
            dt = target - t
        new_v = rk4(n, v, dt, h, cot)
        new_stats = summary(n, new_v, h, cot, sin)
        ok = True
        for i in range(new_v.size):
            if not math.isfinite(new_v[i]):
                ok = False
        if not ok or not (new_stats[1] > 0.0):
            return v, t, k, LOST, stats
        v = new_v
        stats = new_stats
        t = target if landing else t + dt
        rows[k, 0] = t
        rows[k, 1] = dt
        for j in range(5):
            rows[k, 2 + j] = stats[j]
        k += 1
        if stats[3] > threshold:
            return v, t, k, BLOWUP, stats
        if landing:
            return v, t, k, REACHED, stats
