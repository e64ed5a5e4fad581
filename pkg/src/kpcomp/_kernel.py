"""Compiled forward-Euler loop for the compensation ODE.

Curve arithmetic mirrors :mod:`kpcomp.curves` operation for operation so the
compiled and pure-Python paths agree to rounding.
"""
import math

import numpy as np
from numba import njit

OK, DIVERGED = 0, 1


# the sinusoid is also evaluated inline in the loops below; keep both in sync
@njit(cache=True, nogil=True)
def _signal(code, p, tab_t, tab_r, t):
    if code == 0:
        return p[2] if t < p[0] else p[1]
    if code == 1:
        a1, n, h, a2, sigma, mu, omega = p[0], p[1], p[2], p[3], p[4], p[5], p[6]
        tn = t ** n
        amp = a2 / math.sqrt(2 * math.pi * sigma ** 2)
        return a1 * tn / (h ** n + tn) + amp * math.exp(-(t - mu) ** 2 / (2 * sigma ** 2)) * math.sin(omega * t)
    if code == 2:
        return p[0] + p[1] * math.sin(p[2] * t + p[3])
    m = tab_t.shape[0]
    if t <= tab_t[0]:
        return tab_r[0]
    if t >= tab_t[m - 1]:
        return tab_r[m - 1]
    lo = 0
    hi = m - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tab_t[mid] <= t:
            lo = mid
        else:
            hi = mid
    return tab_r[lo] + (tab_r[lo + 1] - tab_r[lo]) * (t - tab_t[lo]) / (tab_t[lo + 1] - tab_t[lo])


@njit(cache=True, nogil=True)
def _update(xs, ys, npts, lsl, rsl, mem, u):
    # curve lookup is written out here: numba does not inline a helper with
    # a loop, and the call overhead dominates the step cost
    for i in range(mem.shape[0]):
        gl = 0.0
        gr = 0.0
        for side in range(2):
            c = 2 * i + side
            n = npts[c]
            if u <= xs[c, 0]:
                v = ys[c, 0] + lsl[c] * (u - xs[c, 0])
            elif u >= xs[c, n - 1]:
                v = ys[c, n - 1] + rsl[c] * (u - xs[c, n - 1])
            else:
                lo = 0
                hi = n - 1
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if xs[c, mid] <= u:
                        lo = mid
                    else:
                        hi = mid
                slope = (ys[c, lo + 1] - ys[c, lo]) / (xs[c, lo + 1] - xs[c, lo])
                v = ys[c, lo] + slope * (u - xs[c, lo])
            if side == 0:
                gl = v
            else:
                gr = v
        mem[i] = min(gl, max(gr, mem[i]))


@njit(cache=True, nogil=True)
def _aggregate(weights, offset, mem):
    w = offset
    for i in range(mem.shape[0]):
        w += weights[i] * mem[i]
    return w


@njit(cache=True, nogil=True)
def run(xs, ys, npts, lsl, rsl, weights, offset, mem, u0, t0, dt, n_steps, K,
        code, p, tab_t, tab_r, stride, u_limit, out):
    """Integrate ``n_steps`` Euler steps from (u0, mem); ``mem`` is updated in place.

    ``mem`` must already be clamped into the band at ``u0``. Every
    ``stride``-th step is written to ``out`` (rows t, r, u, w, e).
    Returns (u_final, status, bad_step, max_abs_e, min_u, max_u, max_abs_u_step).
    """
    u = u0
    max_abs_e = 0.0
    min_u = u0
    max_u = u0
    max_du = 0.0
    countdown = 0
    row = 0
    for k in range(n_steps + 1):
        t = t0 + k * dt
        if code == 2:
            r = p[0] + p[1] * math.sin(p[2] * t + p[3])
        else:
            r = _signal(code, p, tab_t, tab_r, t)
        w = _aggregate(weights, offset, mem)
        e = r - w
        if not (math.isfinite(u) and math.isfinite(e)) or abs(u) > u_limit:
            return u, DIVERGED, k, max_abs_e, min_u, max_u, max_du
        if abs(e) > max_abs_e:
            max_abs_e = abs(e)
        if u < min_u:
            min_u = u
        if u > max_u:
            max_u = u
        if countdown == 0:
            countdown = stride
            out[0, row] = t
            out[1, row] = r
            out[2, row] = u
            out[3, row] = w
            out[4, row] = e
            row += 1
        countdown -= 1
        if k == n_steps:
            break
        du = dt * K * e
        if abs(du) > max_du:
            max_du = abs(du)
        u = u + du
        _update(xs, ys, npts, lsl, rsl, mem, u)
    return u, OK, -1, max_abs_e, min_u, max_u, max_du


@njit(cache=True, nogil=True)
def run_pair(xs, ys, npts, lsl, rsl, weights, offset, mem1, mem2, u1, u2, t0, dt,
             n_steps, K, code, p, tab_t, tab_r, rel_tol):
    """Integrate two trajectories under the same input and track their gap.

    Returns (u1, u2, n_violations, worst_increase, first_bad_step).
    A step violates when |gap| grows by more than rel_tol * max(1, |u1|, |u2|).
    """
    gap = abs(u1 - u2)
    n_bad = 0
    worst = 0.0
    first = -1
    for k in range(n_steps):
        t = t0 + k * dt
        if code == 2:
            r = p[0] + p[1] * math.sin(p[2] * t + p[3])
        else:
            r = _signal(code, p, tab_t, tab_r, t)
        e1 = r - _aggregate(weights, offset, mem1)
        e2 = r - _aggregate(weights, offset, mem2)
        u1 = u1 + dt * K * e1
        u2 = u2 + dt * K * e2
        _update(xs, ys, npts, lsl, rsl, mem1, u1)
        _update(xs, ys, npts, lsl, rsl, mem2, u2)
        new_gap = abs(u1 - u2)
        excess = new_gap - gap
        if excess > rel_tol * max(1.0, abs(u1), abs(u2)):
            n_bad += 1
            if excess > worst:
                worst = excess
            if first < 0:
                first = k + 1
        gap = new_gap
    return u1, u2, n_bad, worst, first


def empty_out(n_rows):
    return np.empty((5, n_rows))
