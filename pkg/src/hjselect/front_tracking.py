"""Weak solutions of v_t + H(v)_x = 0 by characteristics and shock tracking.

A tracked shock is described by its position z(t) and by the two characteristic
feet xi_-(t) <= xi_+(t) that currently arrive on either side of it; every foot
strictly between them has been absorbed.  Shock states are v0(xi_-), v0(xi_+)
and the position obeys the Rankine-Hugoniot law, integrated with fixed-step RK4.
Away from shocks the solution is v0 at the unique surviving foot.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import _shock_kernel as _k
from .characteristics import CharacteristicMap, characteristic_position
from .errors import (
    ConfigError,
    DegenerateJump,
    NoCrossing,
    OnShock,
    StateReconstructionFailed,
)
from .flux import PiecewiseCubicFlux, build_paper_flux, paper_argmax
from .profiles import (
    PiecewiseLinearProfile,
    build_initial_profile,
    symmetric_core_profile,
)

log = logging.getLogger(__name__)

__all__ = [
    "ShockCurve",
    "FrontTrackedSolution",
    "build_counterexample",
    "build_single_shock_solution",
    "characteristic_position",
    "eval_solution",
    "first_crossing",
    "paper_constants",
    "rh_residual",
    "rh_speed",
    "trace_shock",
]


def rh_speed(flux: PiecewiseCubicFlux, v_minus: float, v_plus: float) -> float:
    """Rankine-Hugoniot speed (H(v+) - H(v-)) / (v+ - v-)."""
    jump = v_plus - v_minus
    if abs(jump) < 1e-12:
        raise DegenerateJump(f"jump {jump:.3e} too small for a shock speed")
    return (flux.h(v_plus) - flux.h(v_minus)) / jump


def _shock_speed(flux, v_minus, v_plus):
    # the characteristic speed is the limit of the chord slope at a vanishing jump
    if abs(v_plus - v_minus) < 1e-12:
        return flux.dh(0.5 * (v_minus + v_plus))
    return (flux.h(v_plus) - flux.h(v_minus)) / (v_plus - v_minus)


# -- shock curves -----------------------------------------------------------


@dataclass
class ShockCurve:
    label: str
    t: np.ndarray
    z: np.ndarray
    v_minus: np.ndarray
    v_plus: np.ndarray
    speed: np.ndarray
    xi_minus: np.ndarray
    xi_plus: np.ndarray
    termination: str = "reached_t_end"
    _spline: object = field(default=None, repr=False, compare=False)

    @property
    def origin(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.z[0])

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_stop(self) -> float:
        return float(self.t[-1])

    @property
    def samples(self) -> list[tuple[float, float, float, float, float]]:
        return list(zip(self.t.tolist(), self.z.tolist(), self.v_minus.tolist(),
                        self.v_plus.tolist(), self.speed.tolist()))

    def alive(self, t: float) -> bool:
        if self.termination == "merged":
            return self.t[0] <= t < self.t[-1]
        return self.t[0] <= t <= self.t[-1]

    def position(self, t):
        if self._spline is None:
            if len(self.t) >= 2:
                self._spline = CubicHermiteSpline(self.t, self.z, self.speed)
            else:
                self._spline = lambda s: np.full_like(np.asarray(s, dtype=float), self.z[0])
        return self._spline(t)

    def feet(self, t: float) -> tuple[float, float]:
        return (float(np.interp(t, self.t, self.xi_minus)),
                float(np.interp(t, self.t, self.xi_plus)))

    def states(self, t: float) -> tuple[float, float]:
        return (float(np.interp(t, self.t, self.v_minus)),
                float(np.interp(t, self.t, self.v_plus)))


class _Tracer:
    """Fixed-step RK4 for one shock with foot bookkeeping, run in compiled chunks.

    Between steps the committed feet serve as search references, so the
    absorbed interval (xi_-, xi_+) only ever grows.
    """

    _COLS = ("t", "z", "v_minus", "v_plus", "speed", "xi_minus", "xi_plus")

    def __init__(self, cmap: CharacteristicMap, label: str, t0: float, z0: float,
                 xi_minus: float, xi_plus: float):
        self.cmap = cmap
        self.label = label
        self._pieces = _k.piece_table(cmap)
        self._bp, self._coef = _k.flux_tables(cmap.flux)
        pm = cmap.piece_index(xi_minus, side="left")
        pp = cmap.piece_index(xi_plus, side="right")
        s, vm, vp, xm, xp, im, ip, fails = _k.initial_state(
            self._pieces, self._bp, self._coef, t0, z0, xi_minus, xi_plus, pm, pp)
        self.failures = int(fails)
        self._blocks = [np.array([[t0, z0, vm, vp, s, xm, xp]])]
        self._pidx = [np.array([[im, ip]], dtype=np.int64)]

    @property
    def last(self) -> np.ndarray:
        return self._blocks[-1][-1]

    @property
    def t(self) -> float:
        return float(self.last[0])

    @property
    def z(self) -> float:
        return float(self.last[1])

    @property
    def speed(self) -> float:
        return float(self.last[4])

    def run(self, dt: float, n: int) -> np.ndarray:
        """Advance n steps of size dt and return the new rows."""
        out = np.empty((n, 7))
        out_i = np.empty((n, 2), dtype=np.int64)
        row, (pm, pp) = self.last, self._pidx[-1][-1]
        self.failures += int(_k.rk4_trace(
            self._pieces, self._bp, self._coef, row[0], row[1], row[4], row[5], row[6],
            int(pm), int(pp), float(dt), int(n), out, out_i))
        self._blocks.append(out)
        self._pidx.append(out_i)
        return out

    def step(self, dt: float) -> None:
        self.run(dt, 1)

    def truncate(self, n_keep: int) -> None:
        """Drop every row after the first ``n_keep`` of the last block."""
        self._blocks[-1] = self._blocks[-1][:n_keep]
        self._pidx[-1] = self._pidx[-1][:n_keep]
        if n_keep == 0:
            self._blocks.pop()
            self._pidx.pop()

    def march(self, dt: float, t_end: float, chunk: int = 20000) -> None:
        if self.t > t_end:
            tab, idx = self.table(), np.concatenate(self._pidx)
            keep = tab[:, 0] <= t_end
            self._blocks, self._pidx = [tab[keep]], [idx[keep]]
        n = int(math.ceil((t_end - self.t) / dt - 1e-9))
        while n > 0:
            m = min(n, chunk)
            self.run(dt, m)
            n -= m
        if self.t > t_end:
            # the last step overshot by rounding; redo it exactly
            self.truncate(len(self._blocks[-1]) - 1)
        if t_end - self.t > 1e-9:
            self.run(t_end - self.t, 1)
        else:
            # absorb accumulated rounding in the step count
            self._blocks[-1][-1, 0] = t_end

    def table(self) -> np.ndarray:
        return np.concatenate(self._blocks)

    def curve(self, termination: str = "reached_t_end") -> ShockCurve:
        tab = self.table()
        return ShockCurve(label=self.label, termination=termination,
                          **{c: tab[:, j].copy() for j, c in enumerate(self._COLS)})


def trace_shock(
    flux: PiecewiseCubicFlux,
    v0: PiecewiseLinearProfile,
    t_start: float,
    z_start: float,
    feet: tuple[float, float],
    dt: float,
    stop: Callable[[float, float, float, float], bool] | float,
    label: str = "detected",
) -> ShockCurve:
    """Integrate one shock from (t_start, z_start) until ``stop`` fires.

    ``feet`` are the characteristic feet bounding the absorbed interval at
    the start; ``stop`` is either a final time or a predicate
    ``stop(t, z, v_minus, v_plus)``.
    """
    if not 0 < dt <= 1e-3:
        raise ConfigError(f"dt must lie in (0, 1e-3], got {dt}")
    tracer = _Tracer(CharacteristicMap(flux, v0), label, t_start, z_start, *feet)
    if isinstance(stop, (int, float)):
        tracer.march(dt, float(stop))
        return tracer.curve()
    while True:
        rows = tracer.run(dt, 1000)
        for k, row in enumerate(rows):
            if stop(row[0], row[1], row[2], row[3]):
                tracer.truncate(k + 1)
                return tracer.curve("absorbed")


# -- crossing detection -----------------------------------------------------


def first_crossing(
    flux: PiecewiseCubicFlux, v0: PiecewiseLinearProfile,
    scan_interval: Sequence[float], n_scan: int = 4001,
) -> tuple[float, float]:
    """Earliest characteristic crossing time and its foot, for feet in the scan interval.

    Feet x with c'(x) < 0 focus at t = -1/c'(x), c(x) = H'(v0(x)).  The scan
    picks the best grid point; since c' is linear on each piece, the exact
    optimum on that piece sits at one of its (clipped) ends.
    """
    if n_scan < 1000:
        raise ValueError("n_scan must be at least 1000")
    lo, hi = float(scan_interval[0]), float(scan_interval[1])
    cmap = CharacteristicMap(flux, v0)
    xs = np.linspace(lo, hi, n_scan)
    best_t, best_x, best_piece = math.inf, None, None
    for side in ("right", "left"):
        rates = cmap.compression_rate(xs, side=side)
        with np.errstate(divide="ignore"):
            times = np.where(rates < 0, -1.0 / rates, np.inf)
        k = int(np.argmin(times))
        if times[k] < best_t:
            best_t, best_x = float(times[k]), float(xs[k])
            best_piece = cmap.piece_index(best_x, side=side)
    if not math.isfinite(best_t):
        raise NoCrossing(f"H'(v0) is non-decreasing on [{lo}, {hi}]")
    p_lo, p_hi, _, _, a2, a1, _ = cmap.pieces[best_piece]
    for x in (max(p_lo, lo), min(p_hi, hi)):
        rate = 2.0 * a2 * x + a1
        if rate < 0 and -1.0 / rate <= best_t:
            best_t, best_x = -1.0 / rate, x
    return best_t, best_x


# -- solutions --------------------------------------------------------------


@dataclass
class FrontTrackedSolution:
    flux: PiecewiseCubicFlux
    v0: PiecewiseLinearProfile
    shocks: list[ShockCurve]
    t_end: float
    derived_constants: dict
    mode: str = "paper"
    exact_constants: dict = field(default_factory=dict)
    _cmap: CharacteristicMap | None = field(default=None, repr=False)

    @property
    def cmap(self) -> CharacteristicMap:
        if self._cmap is None:
            self._cmap = CharacteristicMap(self.flux, self.v0)
        return self._cmap

    def shock(self, label: str) -> ShockCurve:
        for s in self.shocks:
            if s.label == label:
                return s
        raise KeyError(label)

    def alive_shocks(self, t: float) -> list[ShockCurve]:
        return [s for s in self.shocks if s.alive(t)]

    def __call__(self, t: float, x):
        return eval_solution(self, t, x)


def _feet_at(cmap: CharacteristicMap, shock: ShockCurve, t: float, z: float,
             slack: float = 1e-6) -> tuple[float, float]:
    """Feet of the characteristics reaching (t, z) from either side of a shock.

    Interpolated feet only seed the search; the returned feet solve
    X^t(xi) = z exactly, which keeps root classification consistent right
    next to the shock.
    """
    xm, xp = shock.feet(t)
    i = min(max(int(np.searchsorted(shock.t, t)), 1), len(shock.t) - 1)
    # interpolation error is bounded by the feet's motion over the bracketing step
    slack = max(slack, abs(shock.xi_minus[i] - shock.xi_minus[i - 1]),
                abs(shock.xi_plus[i] - shock.xi_plus[i - 1]))
    # right after birth the slack can exceed the absorbed interval; the midpoint
    # keeps the two searches on their own sides of the fold
    mid = 0.5 * (xm + xp)
    ref_l, ref_r = min(xm + slack, mid), max(xp - slack, mid)
    left = cmap.left_foot(t, z, ref_l, cmap.piece_index(ref_l, side="left"))
    right = cmap.right_foot(t, z, ref_r, cmap.piece_index(ref_r, side="right"))
    return (left[0] if left else xm), (right[0] if right else xp)


def eval_solution(sol: FrontTrackedSolution, t: float, x, foot_tol: float = 1e-7,
                  on_shock_tol: float = 1e-12):
    """v(t, x): v0 at the unique characteristic foot not absorbed by a shock."""
    if not 0.0 <= t <= sol.t_end + 1e-12:
        raise ValueError(f"t={t} outside [0, {sol.t_end}]")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    roots, stretch = sol.cmap.roots_grid(t, x_arr)
    keep = np.isfinite(roots) & (stretch >= -1e-10)
    for s in sol.alive_shocks(t):
        z = float(s.position(t))
        xm, xp = _feet_at(sol.cmap, s, t, z)
        if np.any(np.abs(x_arr - z) < on_shock_tol):
            raise OnShock(f"x within {on_shock_tol} of shock {s.label} at t={t}")
        left = (x_arr < z)[:, None]
        keep &= np.where(left, roots <= xm + foot_tol, roots >= xp - foot_tol)
    vals = np.where(keep, sol.v0(np.where(keep, roots, 0.0)), np.nan)
    n_keep = keep.sum(axis=1)
    with np.errstate(invalid="ignore"):
        spread = np.nanmax(vals, axis=1, initial=-np.inf) - np.nanmin(vals, axis=1, initial=np.inf)
    bad = (n_keep == 0) | (spread > 1e-7)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise StateReconstructionFailed(
            f"ambiguous or missing characteristic at t={t}, x={x_arr[i]}: "
            f"{int(n_keep[i])} surviving feet"
        )
    out = np.nanmax(vals, axis=1)
    return float(out[0]) if np.ndim(x) == 0 else out


def rh_residual(sol_or_curves, skip_degenerate: bool = True) -> float:
    """max |dz/dt - RH speed| over all samples, dz/dt by centered differences."""
    curves = sol_or_curves.shocks if hasattr(sol_or_curves, "shocks") else sol_or_curves
    worst = 0.0
    for c in curves:
        if len(c.t) < 3:
            continue
        dzdt = np.gradient(c.z, c.t, edge_order=2)
        good = np.abs(c.v_plus - c.v_minus) >= 1e-12 if skip_degenerate else np.ones(len(c.t), bool)
        if not np.any(good):
            continue
        worst = max(worst, float(np.max(np.abs(dzdt - c.speed)[good])))
    return worst


# -- the non-entropy counter-example ------------------------------------------


def paper_constants(flux: PiecewiseCubicFlux | None = None) -> dict:
    """Exact launch constants: a = H'(-3/2), t0 = 1/(a + 1/2), x0 = 3/2 - a t0."""
    flux = flux or build_paper_flux()
    c3, c2, c1, _ = flux.segments[0]
    p = Fraction(-3, 2)
    a = Fraction(3 * c3 * p * p + 2 * c2 * p + c1)
    t0 = 1 / (a + Fraction(1, 2))
    x0 = Fraction(3, 2) - a * t0
    h2 = Fraction(6 * c3 * p + 2 * c2)
    t_c = -1 / h2
    return {"a": a, "t0": t0, "x0": x0, "t_c": t_c}


def _march_pair(left: _Tracer, right: _Tracer, dt: float, t_max: float,
                chunk: int = 2000) -> float:
    """Step two approaching shocks until they meet; returns the meeting point."""
    while True:
        if left.t >= t_max:
            raise StateReconstructionFailed(f"shocks did not merge before t={t_max}")
        rl = np.concatenate([left.last[None], left.run(dt, chunk)])
        rr = np.concatenate([right.last[None], right.run(dt, chunk)])
        close = rr[:, 1] - rl[:, 1] <= 2.0 * dt * (np.abs(rl[:, 4]) + np.abs(rr[:, 4]))
        if not close.any():
            continue
        k = int(np.argmax(close))
        left.truncate(k)
        right.truncate(k)
        gap = right.z - left.z
        closing = left.speed - right.speed
        if closing <= 0:
            raise StateReconstructionFailed("shocks stalled before merging")
        tau = gap / closing
        if tau > 1e-14:
            left.step(tau)
            right.step(tau)
        return 0.5 * (left.z + right.z)


def _crossing_time(tab: np.ndarray, level: float) -> float | None:
    """First time v_plus falls through ``level``, linearly interpolated."""
    vp = tab[:, 3]
    hit = np.nonzero((vp[1:] <= level) & (vp[:-1] > level))[0]
    if hit.size == 0:
        return None
    i = int(hit[0])
    w = (vp[i] - level) / (vp[i] - vp[i + 1])
    return float(tab[i, 0] + w * (tab[i + 1, 0] - tab[i, 0]))


def build_counterexample(
    dt: float = 1e-3,
    mode: str = "paper",
    t_end: float | None = None,
    flux: PiecewiseCubicFlux | None = None,
    aux_dt: float | None = None,
    t3_margin: float = 2.0,
) -> FrontTrackedSolution:
    """Construct the non-entropy weak solution.

    ``paper`` launches the two first shocks where the extreme characteristics
    of the central ramp meet, at (t0, -x0) and (t0, x0); ``detect`` launches
    them at the genuine first crossing instead.  After the symmetric merge at
    time t1 the plateau length is set to L = a t1 and the surviving shock is
    followed until its right state reaches the maximizer of H on [1/2, 3/2]
    (time t3) and then to ``t_end`` (default t3 + ``t3_margin``).

    The far-right end of the ramp folds at its own crossing time; that
    downward shock is tracked as well (label ``detected``) with step ``aux_dt``.
    """
    if mode not in ("paper", "detect"):
        raise ConfigError(f"mode must be 'paper' or 'detect', got {mode!r}")
    if not 0 < dt <= 1e-3:
        raise ConfigError(f"dt must lie in (0, 1e-3], got {dt}")
    flux = flux or build_paper_flux()
    exact = paper_constants(flux)
    a = float(exact["a"])
    core = CharacteristicMap(flux, symmetric_core_profile())

    t_c, x_c = first_crossing(flux, symmetric_core_profile(), (-3.0, 0.0))
    t_c_right, x_c_right = first_crossing(flux, symmetric_core_profile(), (0.0, 3.0))
    if mode == "paper":
        t0, x0 = float(exact["t0"]), float(exact["x0"])
        launch_a = (t0, -x0, -1.5, -0.5)
        launch_b = (t0, x0, 0.5, 1.5)
    else:
        if abs(t_c - t_c_right) > 1e-12:
            raise StateReconstructionFailed("asymmetric first crossings")
        launch_a = (t_c, float(core.position(t_c, x_c)), x_c, x_c)
        launch_b = (t_c_right, float(core.position(t_c_right, x_c_right)), x_c_right, x_c_right)
    tr_a = _Tracer(core, "A", *launch_a)
    tr_b = _Tracer(core, "B", *launch_b)

    offset = _march_pair(tr_a, tr_b, dt, t_max=1e3)
    t1 = tr_a.t
    symmetric = abs(tr_a.z + tr_b.z) <= 1e-8
    z_merge = 0.0 if symmetric else offset
    L = a * t1
    v0 = build_initial_profile(L)
    cmap = CharacteristicMap(flux, v0)
    shock_a = tr_a.curve("merged")
    shock_b = tr_b.curve("merged")

    z_star = paper_argmax(flux)
    t3 = None
    if t_end is not None and t_end < t1:
        # the pair never meets before t_end; retrace both to land on it exactly
        shocks = []
        for label, (t_s, z_s, xm, xp) in (("A", launch_a), ("B", launch_b)):
            tr = _Tracer(core, label, t_s, z_s, xm, xp)
            tr.march(dt, t_end)
            shocks.append(tr.curve())
    else:
        tr_c = _Tracer(cmap, "C", t1, z_merge, float(tr_a.last[5]), float(tr_b.last[6]))
        if t_end is None:
            while t3 is None:
                if tr_c.t > 1e4:
                    raise StateReconstructionFailed("right state never reached the maximizer")
                tr_c.run(dt, 20000)
                t3 = _crossing_time(tr_c.table(), z_star)
            t_end = t3 + t3_margin
        tr_c.march(dt, t_end)
        t3 = _crossing_time(tr_c.table(), z_star)
        shocks = [shock_a, shock_b, tr_c.curve()]

    # the ramp's own compressive end
    ramp_lo, ramp_hi = L - 0.5, L + 1.5
    try:
        t_d, x_d = first_crossing(flux, v0, (ramp_lo, ramp_hi))
    except NoCrossing:
        t_d = math.inf
    if t_d < t_end:
        tr_d = _Tracer(cmap, "detected", t_d, float(cmap.position(t_d, x_d)), x_d, x_d)
        tr_d.march(aux_dt or 1e-3, t_end)
        shocks.append(tr_d.curve())

    for tr in (tr_a, tr_b):
        if tr.failures:
            log.debug("shock %s: %d foot fallbacks", tr.label, tr.failures)

    derived = {
        "a": a,
        "x0": float(exact["x0"]),
        "t0": float(exact["t0"]),
        "t_c": float(t_c),
        "t_c_detected": float(t_c),
        "t1": float(t1),
        "L": float(L),
        "t3": t3,
        "argmax_z": float(z_star),
        "merge_offset": float(abs(offset)),
        "merge_symmetric": bool(symmetric),
    }
    if mode == "detect":
        derived["launch_t"] = float(t_c)
        derived["launch_x"] = float(core.position(t_c, x_c))
    exact_strings = {k: str(v) for k, v in exact.items()}
    return FrontTrackedSolution(
        flux=flux, v0=v0, shocks=shocks, t_end=float(t_end),
        derived_constants=derived, mode=mode, exact_constants=exact_strings,
    )


def _compressive_jump(flux: PiecewiseCubicFlux, v0: PiecewiseLinearProfile) -> float | None:
    """Outer knot where v0 jumps with H'(left) > H'(right), if any.

    Interior pieces interpolate the knot values, so only the extensions can
    detach from the profile.
    """
    xs, vs = v0._x, v0._v
    for x, vl, vr in ((xs[0], float(v0.left_extension), vs[0]),
                      (xs[-1], vs[-1], float(v0.right_extension))):
        if abs(vl - vr) > 1e-12 and flux.dh(vl) > flux.dh(vr):
            return float(x)
    return None


def build_single_shock_solution(
    flux: PiecewiseCubicFlux,
    v0: PiecewiseLinearProfile,
    t_end: float,
    dt: float = 1e-3,
    scan_interval: Sequence[float] | None = None,
    label: str = "detected",
) -> FrontTrackedSolution:
    """Characteristics plus one shock launched at the first crossing (if any)."""
    if scan_interval is None:
        lo, hi = float(v0._x[0]), float(v0._x[-1])
        pad = 1.0 + (hi - lo)
        scan_interval = (lo - pad, hi + pad)
    cmap = CharacteristicMap(flux, v0)
    shocks = []
    derived = {"t_c": None}
    jump = _compressive_jump(flux, v0)
    if jump is not None:
        t_c, x_c = 0.0, jump
    else:
        try:
            t_c, x_c = first_crossing(flux, v0, scan_interval)
        except NoCrossing:
            t_c = math.inf
    if t_c < t_end:
        tr = _Tracer(cmap, label, t_c, float(cmap.position(t_c, x_c)), x_c, x_c)
        tr.march(dt, t_end)
        shocks.append(tr.curve())
        derived["t_c"] = float(t_c)
    elif math.isfinite(t_c):
        derived["t_c"] = float(t_c)
    return FrontTrackedSolution(flux=flux, v0=v0, shocks=shocks, t_end=float(t_end),
                                derived_constants=derived, mode="detect")


# -- Hamilton-Jacobi picture ---------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def kink_positions(sol: FrontTrackedSolution, t: float) -> np.ndarray:
    """Images X^t of every finite piece boundary plus live shock positions."""
    ends = {p[0] for p in sol.cmap.pieces} | {p[1] for p in sol.cmap.pieces}
    ends = np.array(sorted(e for e in ends if math.isfinite(e)))
    kinks = np.asarray(sol.cmap.position(t, ends)) if ends.size else np.empty(0)
    shocks = np.array([float(s.position(t)) for s in sol.alive_shocks(t)])
    if shocks.size and kinks.size:
        # a kink image sitting on a shock would leave a sliver interval touching it
        kinks = kinks[np.min(np.abs(kinks[:, None] - shocks[None, :]), axis=1) > 1e-9]
    return np.unique(np.concatenate([kinks, shocks]))


def hj_function(sol: FrontTrackedSolution, x_anchor: float, u_anchor_t0: float = 0.0):
    """f(t, x) = f(t, x_anchor) - integral of v(t, .) from x_anchor to x.

    The anchor must sit in the constant far-left region, where f moves by
    H(v) per unit time.  Integration is Gauss-Legendre on every interval
    between kinks and shocks, so it is exact to quadrature accuracy.
    """
    v_anchor = float(sol.v0.left_extension)
    rate = sol.flux.h(v_anchor)

    def f(t: float, x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x_arr < x_anchor):
            raise ValueError("points must lie right of the anchor")
        cuts = kink_positions(sol, t)
        cuts = cuts[(cuts > x_anchor) & (cuts < x_arr.max())]
        grid = np.unique(np.concatenate([[x_anchor], cuts, x_arr]))
        a, b = grid[:-1], grid[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes = mid[:, None] + half[:, None] * _GL_X
        vals = eval_solution(sol, t, nodes.ravel()).reshape(nodes.shape)
        pieces = half * (vals @ _GL_W)
        cum = np.concatenate([[0.0], np.cumsum(pieces)])
        out = u_anchor_t0 + t * rate - cum[np.searchsorted(grid, x_arr)]
        return float(out[0]) if np.ndim(x) == 0 else out

    return f
