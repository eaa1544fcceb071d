"""Compiled RK4 stepping for foot-tracked shocks.

The piece table is the (m, 7) array (x_lo, x_hi, alpha, beta, a2, a1, a0) of
:class:`~hjselect.characteristics.CharacteristicMap`; the flux is passed as
its breakpoints and (n_segments, 4) coefficient rows.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ROOT_TOL = 1e-12
STRETCH_TOL = 1e-10
BACK_TOL = 1e-9


@njit(cache=True)
def _segment(bp, p):
    # searchsorted(side="left"): a breakpoint belongs to its left segment
    i = 0
    while i < bp.shape[0] and bp[i] < p:
        i += 1
    return i


@njit(cache=True)
def flux_h(bp, coef, p):
    c = coef[_segment(bp, p)]
    return ((c[0] * p + c[1]) * p + c[2]) * p + c[3]


@njit(cache=True)
def flux_dh(bp, coef, p):
    c = coef[_segment(bp, p)]
    return (3.0 * c[0] * p + 2.0 * c[1]) * p + c[2]


@njit(cache=True)
def _piece_roots(pieces, i, t, y):
    lo = pieces[i, 0]
    hi = pieces[i, 1]
    A = t * pieces[i, 4]
    B = 1.0 + t * pieces[i, 5]
    C = t * pieces[i, 6] - y
    r1 = math.nan
    r2 = math.nan
    if A == 0.0 or abs(A) * (1.0 + abs(y)) < 1e-15 * abs(B):
        if B != 0.0:
            r1 = -C / B
    else:
        disc = B * B - 4.0 * A * C
        if disc < 0.0 and disc > -1e-14 * B * B:
            disc = 0.0
        if disc >= 0.0:
            sq = math.sqrt(disc)
            q = -0.5 * (B + math.copysign(sq, B))
            if q != 0.0:
                r1 = q / A
                r2 = C / q
            else:
                r1 = 0.0
    tol = ROOT_TOL * (1.0 + abs(y))
    if not (lo - tol <= r1 <= hi + tol):
        r1 = math.nan
    if not (lo - tol <= r2 <= hi + tol):
        r2 = math.nan
    return r1, 2.0 * A * r1 + B, r2, 2.0 * A * r2 + B


@njit(cache=True)
def right_foot(pieces, t, y, ref, start):
    floor = ref - BACK_TOL * (1.0 + abs(ref))
    for i in range(start, pieces.shape[0]):
        if pieces[i, 1] < floor:
            continue
        r1, d1, r2, d2 = _piece_roots(pieces, i, t, y)
        best = math.nan
        if r1 == r1 and d1 >= -STRETCH_TOL and r1 >= floor:
            best = r1
        if r2 == r2 and d2 >= -STRETCH_TOL and r2 >= floor and not (best <= r2):
            best = r2
        if best == best:
            return True, best, i
    return False, ref, start


@njit(cache=True)
def left_foot(pieces, t, y, ref, start):
    ceil = ref + BACK_TOL * (1.0 + abs(ref))
    for i in range(start, -1, -1):
        if pieces[i, 0] > ceil:
            continue
        r1, d1, r2, d2 = _piece_roots(pieces, i, t, y)
        best = math.nan
        if r1 == r1 and d1 >= -STRETCH_TOL and r1 <= ceil:
            best = r1
        if r2 == r2 and d2 >= -STRETCH_TOL and r2 <= ceil and not (best >= r2):
            best = r2
        if best == best:
            return True, best, i
    return False, ref, start


@njit(cache=True)
def _states(pieces, bp, coef, t, z, ref_m, ref_p, pm, pp):
    ok_m, xm, im = left_foot(pieces, t, z, ref_m, pm)
    ok_p, xp, ip = right_foot(pieces, t, z, ref_p, pp)
    vm = pieces[im, 2] * xm + pieces[im, 3]
    vp = pieces[ip, 2] * xp + pieces[ip, 3]
    if abs(vp - vm) < 1e-12:
        s = flux_dh(bp, coef, 0.5 * (vm + vp))
    else:
        s = (flux_h(bp, coef, vp) - flux_h(bp, coef, vm)) / (vp - vm)
    fails = (0 if ok_m else 1) + (0 if ok_p else 1)
    return s, vm, vp, xm, xp, im, ip, fails


@njit(cache=True)
def initial_state(pieces, bp, coef, t, z, ref_m, ref_p, pm, pp):
    return _states(pieces, bp, coef, t, z, ref_m, ref_p, pm, pp)


@njit(cache=True)
def rk4_trace(pieces, bp, coef, t, z, speed, ref_m, ref_p, pm, pp, dt, n, out, out_i):
    """Advance n steps; row k of ``out`` receives (t, z, v-, v+, speed, xi-, xi+)."""
    fails = 0
    for k in range(n):
        k1 = speed
        k2 = _states(pieces, bp, coef, t + 0.5 * dt, z + 0.5 * dt * k1, ref_m, ref_p, pm, pp)[0]
        k3 = _states(pieces, bp, coef, t + 0.5 * dt, z + 0.5 * dt * k2, ref_m, ref_p, pm, pp)[0]
        k4 = _states(pieces, bp, coef, t + dt, z + dt * k3, ref_m, ref_p, pm, pp)[0]
        z = z + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        t = t + dt
        speed, vm, vp, xm, xp, im, ip, f = _states(pieces, bp, coef, t, z, ref_m, ref_p, pm, pp)
        fails += f
        ref_m, ref_p, pm, pp = xm, xp, im, ip
        out[k, 0] = t
        out[k, 1] = z
        out[k, 2] = vm
        out[k, 3] = vp
        out[k, 4] = speed
        out[k, 5] = xm
        out[k, 6] = xp
        out_i[k, 0] = im
        out_i[k, 1] = ip
    return fails


def piece_table(cmap) -> np.ndarray:
    return np.array(cmap.pieces, dtype=float)


def flux_tables(flux) -> tuple[np.ndarray, np.ndarray]:
    return (np.array(flux._bp_list, dtype=float),
            np.array(flux._coef_list, dtype=float).reshape(-1, 4))
