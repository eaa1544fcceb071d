"""Piecewise cubic fluxes (Hamiltonians) and their one-dimensional calculus.

The non-convex flux used throughout the package is the even C^2 function

    H(p) =  5/4 p^3 + 19/8 p^2 + 15/16 p + 5/32    p <= -1/2
            1/2 p^2                                 |p| <= 1/2
           -5/4 p^3 + 19/8 p^2 - 15/16 p + 5/32    p >= 1/2

Coefficients are stored as exact fractions and evaluated in floating point.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NonConcaveObjective

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PiecewiseCubicFlux:
    """H(p) = c3 p^3 + c2 p^2 + c1 p + c0 on each interval between breakpoints.

    ``segments[i]`` applies on ``(breakpoints[i-1], breakpoints[i]]`` with the
    obvious unbounded conventions at both ends, so a breakpoint evaluates with
    its left segment.
    """

    breakpoints: tuple
    segments: tuple
    declared_smoothness: int = 2
    name: str = "custom"
    _coef: np.ndarray = field(init=False, repr=False, compare=False)
    _bp: np.ndarray = field(init=False, repr=False, compare=False)
    _bp_list: list = field(init=False, repr=False, compare=False)
    _coef_list: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bp = tuple(self.breakpoints)
        segs = tuple(tuple(s) for s in self.segments)
        if len(segs) != len(bp) + 1:
            raise ValueError(
                f"need {len(bp) + 1} segments for {len(bp)} breakpoints, got {len(segs)}"
            )
        if any(len(s) != 4 for s in segs):
            raise ValueError("each segment needs four coefficients (c3, c2, c1, c0)")
        bp_arr = np.array([float(b) for b in bp], dtype=float)
        if np.any(np.diff(bp_arr) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "_bp", bp_arr)
        object.__setattr__(
            self, "_coef", np.array([[float(c) for c in s] for s in segs], dtype=float)
        )
        object.__setattr__(self, "_bp_list", [float(b) for b in bp])
        object.__setattr__(self, "_coef_list", [tuple(float(c) for c in s) for s in segs])

    # -- evaluation ---------------------------------------------------------

    def segment_index(self, p):
        return np.searchsorted(self._bp, p, side="left")

    def segment_bounds(self, i: int) -> tuple[float, float]:
        lo = -math.inf if i == 0 else float(self._bp[i - 1])
        hi = math.inf if i == len(self._bp) else float(self._bp[i])
        return lo, hi

    def __call__(self, p, order: int = 0):
        return self.evaluate(p, order)

    def evaluate(self, p, order: int = 0):
        if order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {order}")
        p_arr = np.asarray(p, dtype=float)
        c3, c2, c1, c0 = np.moveaxis(self._coef[self.segment_index(p_arr)], -1, 0)
        if order == 0:
            out = ((c3 * p_arr + c2) * p_arr + c1) * p_arr + c0
        elif order == 1:
            out = (3.0 * c3 * p_arr + 2.0 * c2) * p_arr + c1
        else:
            out = 6.0 * c3 * p_arr + 2.0 * c2
        return float(out) if out.ndim == 0 else out

    # scalar fast paths for the shock tracer's inner loop

    def h(self, p: float) -> float:
        c3, c2, c1, c0 = self._coef_list[bisect.bisect_left(self._bp_list, p)]
        return ((c3 * p + c2) * p + c1) * p + c0

    def dh(self, p: float) -> float:
        c3, c2, c1, _ = self._coef_list[bisect.bisect_left(self._bp_list, p)]
        return (3.0 * c3 * p + 2.0 * c2) * p + c1

    def d2h(self, p: float) -> float:
        c3, c2, _, _ = self._coef_list[bisect.bisect_left(self._bp_list, p)]
        return 6.0 * c3 * p + 2.0 * c2

    def derivative(self, p):
        return self.evaluate(p, 1)

    def second_derivative(self, p):
        return self.evaluate(p, 2)

    # -- exact structure ----------------------------------------------------

    def breakpoint_gaps(self) -> np.ndarray:
        """|jump| of H, H', H'' at each breakpoint; shape (n_breakpoints, 3)."""
        gaps = np.zeros((len(self._bp), 3))
        for j, b in enumerate(self._bp):
            left, right = self._coef[j], self._coef[j + 1]
            for order in range(3):
                gaps[j, order] = abs(
                    _poly_eval(left, b, order) - _poly_eval(right, b, order)
                )
        return gaps

    def roots_of_derivative(self, order: int, lo: float, hi: float) -> list[float]:
        """Real zeros of H^(order) in [lo, hi], segment by segment.

        Segments on which the derivative vanishes identically contribute
        nothing; callers treat those through the interval endpoints.
        """
        roots: list[float] = []
        for i, coef in enumerate(self._coef):
            s_lo, s_hi = self.segment_bounds(i)
            a, b = max(lo, s_lo), min(hi, s_hi)
            if a > b:
                continue
            poly = _derivative_coefficients(coef, order)
            for r in _real_roots(poly):
                if a - 1e-14 <= r <= b + 1e-14:
                    roots.append(min(max(r, a), b))
        return sorted(roots)

    def extrema(self, lo: float, hi: float) -> tuple[float, float, float, float]:
        """(argmin, min, argmax, max) of H over [lo, hi], from exact critical points."""
        cand = np.array([lo, hi] + self.roots_of_derivative(1, lo, hi))
        vals = self.evaluate(cand)
        i_min, i_max = int(np.argmin(vals)), int(np.argmax(vals))
        return float(cand[i_min]), float(vals[i_min]), float(cand[i_max]), float(vals[i_max])

    def max_abs_derivative(self, lo: float, hi: float) -> float:
        cand = np.array([lo, hi] + self.roots_of_derivative(2, lo, hi))
        return float(np.max(np.abs(self.evaluate(cand, 1))))

    def max_abs_second_derivative(self, lo: float, hi: float) -> float:
        # H'' is piecewise linear, so its extremes sit on endpoints or breakpoints;
        # both one-sided values count when the flux is only C^1
        vals = [abs(self.evaluate(lo, 2)), abs(self.evaluate(hi, 2))]
        for j, b in enumerate(self._bp):
            if lo < b < hi:
                vals.append(abs(_poly_eval(self._coef[j + 1], b, 2)))
        return float(max(vals))

    def critical_values(self) -> np.ndarray:
        """All critical points of H on the real line (used by the Godunov flux)."""
        return np.array(self.roots_of_derivative(1, -math.inf, math.inf))

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "breakpoints": [_jsonable(b) for b in self.breakpoints],
            "segments": [[_jsonable(c) for c in s] for s in self.segments],
            "declared_smoothness": self.declared_smoothness,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewiseCubicFlux":
        return cls(
            breakpoints=tuple(_parse_number(b) for b in data["breakpoints"]),
            segments=tuple(tuple(_parse_number(c) for c in s) for s in data["segments"]),
            declared_smoothness=int(data.get("declared_smoothness", 2)),
            name=data.get("name", "custom"),
        )

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseCubicFlux":
        return cls.from_dict(json.loads(text))


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return x


def _parse_number(x):
    if isinstance(x, str):
        return Fraction(x)
    return x


def _poly_eval(coef, p, order):
    c3, c2, c1, c0 = coef
    if order == 0:
        return ((c3 * p + c2) * p + c1) * p + c0
    if order == 1:
        return (3 * c3 * p + 2 * c2) * p + c1
    return 6 * c3 * p + 2 * c2


def _derivative_coefficients(coef, order):
    """Coefficients of H^(order) on one segment, highest degree first."""
    c3, c2, c1, c0 = coef
    if order == 0:
        return [c3, c2, c1, c0]
    if order == 1:
        return [3 * c3, 2 * c2, c1]
    if order == 2:
        return [6 * c3, 2 * c2]
    raise ValueError(order)


def _real_roots(poly) -> list[float]:
    poly = list(poly)
    while poly and poly[0] == 0:
        poly.pop(0)
    if len(poly) <= 1:
        return []
    if len(poly) == 2:
        return [-poly[1] / poly[0]]
    if len(poly) == 3:
        return list(solve_quadratic(*poly))
    roots = np.roots(poly)
    return [float(r.real) for r in roots if abs(r.imag) < 1e-12]


def solve_quadratic(a: float, b: float, c: float) -> tuple[float, ...]:
    """Real roots of a x^2 + b x + c, cancellation-free."""
    if a == 0:
        return () if b == 0 else (-c / b,)
    disc = b * b - 4 * a * c
    if disc < 0:
        return ()
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    if q == 0:
        return (0.0, 0.0)
    r1, r2 = q / a, c / q
    return (min(r1, r2), max(r1, r2))


# -- constructors -----------------------------------------------------------


def build_paper_flux() -> PiecewiseCubicFlux:
    F = Fraction
    return PiecewiseCubicFlux(
        breakpoints=(F(-1, 2), F(1, 2)),
        segments=(
            (F(5, 4), F(19, 8), F(15, 16), F(5, 32)),
            (F(0), F(1, 2), F(0), F(0)),
            (F(-5, 4), F(19, 8), F(-15, 16), F(5, 32)),
        ),
        declared_smoothness=2,
        name="paper",
    )


def quadratic_flux() -> PiecewiseCubicFlux:
    """H(p) = p^2 / 2."""
    return PiecewiseCubicFlux(
        breakpoints=(),
        segments=((Fraction(0), Fraction(1, 2), Fraction(0), Fraction(0)),),
        name="quadratic",
    )


def flux_by_name(name: str) -> PiecewiseCubicFlux:
    if name == "paper":
        return build_paper_flux()
    if name == "quadratic":
        return quadratic_flux()
    raise ValueError(f"unknown flux {name!r}; expected 'paper' or 'quadratic'")


def eval_flux(flux: PiecewiseCubicFlux, p: float, order: int = 0) -> float:
    return flux.evaluate(p, order)


# -- optimization helpers ---------------------------------------------------


def golden_section_max(
    func: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10,
    max_iter: int = 500,
) -> tuple[float, float]:
    """Maximize a unimodal function on [lo, hi]; returns (argmax, max)."""
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = func(x1), func(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = func(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = func(x1)
    x = 0.5 * (a + b)
    return x, func(x)


def _check_concave_objective(flux: PiecewiseCubicFlux, lo: float, hi: float, n: int = 257):
    p = np.linspace(lo, hi, n)
    h = p[1] - p[0]
    vals = flux.evaluate(p)
    # second difference of p*q - H(p) does not depend on q
    d2 = -(vals[2:] - 2 * vals[1:-1] + vals[:-2])
    floor = 64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(vals))))
    worst = float(np.max(d2))
    if worst > floor:
        i = int(np.argmax(d2)) + 1
        raise NonConcaveObjective(
            f"p*q - H(p) is not concave on [{lo}, {hi}]: second difference "
            f"{worst:.3e} > 0 near p={p[i]:.6g} (H''~{-worst / h**2:.4g})"
        )


def legendre_conjugate(
    flux: PiecewiseCubicFlux, q: float, search_interval: Sequence[float],
    tol: float = 1e-10,
    check: bool = True,
) -> float:
    """H*(q) = sup_{p in [lo, hi]} (p q - H(p)), by golden-section search.

    ``check=False`` skips the concavity test, for callers that have already
    validated the interval.
    """
    lo, hi = float(search_interval[0]), float(search_interval[1])
    if not hi > lo:
        raise ValueError("search interval must have positive length")
    if check:
        _check_concave_objective(flux, lo, hi)

    def objective(p):
        return p * q - flux.h(p)

    _, best = golden_section_max(objective, lo, hi, tol=min(tol, 1e-8 * (hi - lo)))
    return max(best, objective(lo), objective(hi))


# -- reports ----------------------------------------------------------------


@dataclass(frozen=True)
class ConvexityReport:
    interval: tuple[float, float]
    is_convex: bool
    is_strictly_convex: bool
    inflection_points: list[float]
    argmax_on_interval: float
    max_value: float


def convexity_report(flux: PiecewiseCubicFlux, interval: Sequence[float]) -> ConvexityReport:
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    # H'' is linear per segment: its sign pattern is fixed by the values at the
    # segment ends and its roots
    nodes = sorted({lo, hi, *[float(b) for b in flux.breakpoints if lo < b < hi]})
    d2 = []
    for a, b in zip(nodes[:-1], nodes[1:]):
        i = int(flux.segment_index(0.5 * (a + b)))
        coef = flux._coef[i]
        d2.append((_poly_eval(coef, a, 2), _poly_eval(coef, b, 2)))
    tol = 1e-12
    is_convex = all(min(v) >= -tol for v in d2)
    # strict: no subinterval on which H'' vanishes identically
    is_strict = is_convex and all(max(abs(v[0]), abs(v[1])) > tol for v in d2)
    inflections = []
    for r in flux.roots_of_derivative(2, lo, hi):
        if lo < r < hi:
            left, right = flux.evaluate(r - 1e-7, 2), flux.evaluate(r + 1e-7, 2)
            if left * right < 0:
                inflections.append(float(r))
    _, _, arg, val = flux.extrema(lo, hi)
    return ConvexityReport(
        interval=(lo, hi),
        is_convex=is_convex,
        is_strictly_convex=is_strict,
        inflection_points=inflections,
        argmax_on_interval=arg,
        max_value=val,
    )


def paper_argmax(flux: PiecewiseCubicFlux | None = None) -> float:
    """Maximizer of the non-convex flux on [1/2, 3/2]."""
    return convexity_report(flux or build_paper_flux(), (0.5, 1.5)).argmax_on_interval


def tangent_gap(flux: PiecewiseCubicFlux, p: float, q: float) -> float:
    """H(q) - [H(p) + H'(p)(q - p)]: distance of the graph above its tangent at p."""
    return flux.evaluate(q) - (flux.evaluate(p) + flux.evaluate(p, 1) * (q - p))


@dataclass(frozen=True)
class DoubleWellReport:
    minimizers: tuple[float, float]
    local_max_at: float
    barrier_value: float
    well_value: float


def theta_slice(t):
    """theta(t, 1 - t) for theta(x, y) = x^2 + y^2 + 6 x^2 y^2."""
    t = np.asarray(t, dtype=float)
    s = 1.0 - t
    return t**2 + s**2 + 6.0 * t**2 * s**2


def theta_slice_derivative(t):
    t = np.asarray(t, dtype=float)
    return 2.0 * (2.0 * t - 1.0) * (1.0 - 6.0 * t * (1.0 - t))


def theta_slice_analysis(grid_points: int = 1001) -> DoubleWellReport:
    """Locate the two wells and the barrier of theta along the anti-diagonal.

    Interior extrema are bracketed on a uniform grid and polished as roots of
    the analytic derivative, which pins the symmetric barrier at exactly 1/2.
    """
    if grid_points < 100:
        raise ValueError("grid_points must be at least 100")
    t = np.linspace(0.0, 1.0, grid_points)
    g = theta_slice(t)
    h = t[1] - t[0]
    interior = np.arange(1, grid_points - 1)
    is_min = (g[interior] <= g[interior - 1]) & (g[interior] <= g[interior + 1])
    is_max = (g[interior] >= g[interior - 1]) & (g[interior] >= g[interior + 1])

    def polish(i):
        lo, hi = t[i] - h, t[i] + h
        d_lo, d_hi = theta_slice_derivative(lo), theta_slice_derivative(hi)
        if d_lo == 0:
            return float(lo)
        if d_hi == 0:
            return float(hi)
        return float(brentq(theta_slice_derivative, lo, hi, xtol=1e-15))

    mins = sorted(polish(i) for i in interior[is_min])
    maxs = sorted({polish(i) for i in interior[is_max]})
    if len(mins) != 2 or len(maxs) != 1:
        raise ValueError(f"expected a double well, found minima {mins} and maxima {maxs}")
    m = maxs[0]
    return DoubleWellReport(
        minimizers=(mins[0], mins[1]),
        local_max_at=m,
        barrier_value=float(theta_slice(m)),
        well_value=float(0.5 * (theta_slice(mins[0]) + theta_slice(mins[1]))),
    )
