"""Comparison studies shared by the command line driver and the acceptance suite.

Each study takes already-built solutions and returns plain numbers, so the
same measurement backs a CLI artifact and a pass/fail line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .flow import (
    FlowDiagnostics,
    FlowEnsemble,
    ensemble_integral_residuals,
    flow_diagnostics,
    integrate_flow,
    mollify_profile,
    suggested_step,
    w_flow,
)
from .flux import PiecewiseCubicFlux, quadratic_flux
from .front_tracking import (
    FrontTrackedSolution,
    build_single_shock_solution,
    eval_solution,
    hj_function,
)
from .profiles import profile_from_points
from .regularity import grid_from_function, semiconcavity_constant
from .viscosity import CorrespondenceAnchor, GridSolution, cl_to_hj, godunov_solve

__all__ = [
    "GapRow",
    "convex_control_solution",
    "flow_study",
    "gap_study",
    "l1_gap",
    "reference_grid",
    "richardson_error",
    "w_monotone_study",
]


def convex_control_solution(t_end: float = 4.0, dt: float = 1e-3) -> FrontTrackedSolution:
    """p^2/2 with a decreasing ramp from 1 to -1/2: one moving entropic shock from t = 4/3."""
    v0 = profile_from_points([-1.0, 1.0], [1.0, -0.5])
    return build_single_shock_solution(quadratic_flux(), v0, t_end, dt=dt, scan_interval=(-3.0, 3.0))


def reference_grid(sol: FrontTrackedSolution, domain: Sequence[float], t_max: float,
                   cells_per_unit: int, save_times: Sequence[float], cfl: float = 0.45,
                   flux_id: str | None = None) -> GridSolution:
    cells = int(round((domain[1] - domain[0]) * cells_per_unit))
    return godunov_solve(sol.flux, sol.v0, domain, t_max, cells, cfl=cfl,
                         save_times=save_times, flux_id=flux_id)


def _window(g: GridSolution, lo: float, hi: float) -> np.ndarray:
    x = g.x
    return (x > lo) & (x < hi)


def _sample(sol: FrontTrackedSolution, t: float, x: np.ndarray, h: float = 1e-9) -> np.ndarray:
    """eval_solution, with nodes sitting on a shock read as the mean of both sides."""
    on = np.zeros(x.shape, dtype=bool)
    for s in sol.alive_shocks(t):
        on |= np.abs(x - float(s.position(t))) < h
    out = np.empty_like(x)
    out[~on] = eval_solution(sol, t, x[~on])
    if on.any():
        out[on] = 0.5 * (eval_solution(sol, t, x[on] - 2 * h) + eval_solution(sol, t, x[on] + 2 * h))
    return out


def l1_gap(sol: FrontTrackedSolution, g: GridSolution, t: float, lo: float, hi: float,
           skip: Callable[[float, np.ndarray], np.ndarray] | None = None) -> float:
    """L1 distance on (lo, hi) between the tracked solution at cell centres and the grid."""
    w = _window(g, lo, hi)
    x = g.x[w]
    diff = np.abs(_sample(sol, t, x) - g.frame(t)[w])
    if skip is not None:
        diff = np.where(skip(t, x), 0.0, diff)
    return float(np.sum(diff) * g.dx)


def richardson_error(g: GridSolution, g_fine: GridSolution, t: float, lo: float, hi: float) -> float:
    """Scheme-error estimate 2 ||G_N - G_2N||_1 with the fine grid pooled pairwise.

    For a first-order scheme the error of G_N is about twice its distance to G_2N.
    """
    if g_fine.cells != 2 * g.cells:
        raise ValueError("fine grid must have exactly twice the cells")
    fine = g_fine.frame(t)
    pooled = 0.5 * (fine[0::2] + fine[1::2])
    w = _window(g, lo, hi)
    return 2.0 * float(np.sum(np.abs(g.frame(t) - pooled)[w]) * g.dx)


@dataclass(frozen=True)
class GapRow:
    t: float
    cells_per_unit: int
    gap: float
    scheme_error: float

    @property
    def ratio(self) -> float:
        return self.gap / self.scheme_error if self.scheme_error > 0 else math.inf


def gap_study(sol: FrontTrackedSolution, times: Sequence[float], window: Sequence[float],
              domain: Sequence[float], cells_per_unit: Sequence[int],
              skip: Callable[[float, np.ndarray], np.ndarray] | None = None,
              ) -> tuple[list[GapRow], dict[int, GridSolution]]:
    """Gap to the Godunov reference and its Richardson scheme error per resolution.

    Each resolution N is paired with 2N for the error estimate, so grids at
    both are computed.
    """
    t_max = max(times)
    # a whole number of units keeps the 2N grid nested in the N grid
    domain = (float(domain[0]), float(domain[0]) + math.ceil(domain[1] - domain[0]))
    grids: dict[int, GridSolution] = {}
    for cp in sorted(set(cells_per_unit) | {2 * c for c in cells_per_unit}):
        grids[cp] = reference_grid(sol, domain, t_max, cp, times)
    rows = []
    for cp in cells_per_unit:
        for t in times:
            rows.append(GapRow(float(t), int(cp),
                               l1_gap(sol, grids[cp], t, *window, skip=skip),
                               richardson_error(grids[cp], grids[2 * cp], t, *window)))
    return rows, grids


# -- comparison along the straight-line flow ------------------------------------------


def w_monotone_study(
    f: Callable[[float, np.ndarray], np.ndarray],
    u: Callable[[float, np.ndarray], np.ndarray],
    flux: PiecewiseCubicFlux,
    u0_grad,
    starts: Sequence[float],
    times: Sequence[float],
) -> tuple[float, float]:
    """(worst per-step decrease of (f - u)(t, W(t, x)), min of f - u at the last time)."""
    starts = np.asarray(starts, dtype=float)
    prev = None
    worst = 0.0
    for t in times:
        pos = w_flow(flux, u0_grad, float(t), starts)
        d = np.asarray(f(float(t), pos), dtype=float) - np.asarray(u(float(t), pos), dtype=float)
        if prev is not None:
            worst = max(worst, float(np.max(prev - d)))
        prev = d
    return worst, float(np.min(prev))


def grid_interpolant(g: GridSolution) -> Callable[[float, np.ndarray], np.ndarray]:
    """Cubic-spline reading of a nodal grid at arbitrary (t, x) on stored frames."""

    def u(t: float, x):
        return CubicSpline(g.x, g.frame(t))(x)

    return u


def hj_pair(sol: FrontTrackedSolution, domain: Sequence[float], t_max: float,
            cells_per_unit: int, times: Sequence[float]):
    """Tracked f and Godunov-reference u sharing one anchor at the left edge.

    Returns (f, u, u_grid, v_grid) with u read off the nodal grid by splines.
    """
    g = reference_grid(sol, domain, t_max, cells_per_unit, times)
    x_anchor = domain[0] + 0.5
    anchor = CorrespondenceAnchor(x_anchor, 0.0, float(sol.v0.left_extension))
    u_grid = cl_to_hj(g, anchor, sol.flux)
    return hj_function(sol, x_anchor), grid_interpolant(u_grid), u_grid, g


# -- mollified flows ----------------------------------------------------------------


@dataclass
class FlowStudy:
    epsilons: list[float]
    starts: np.ndarray
    t_max: float
    residuals: dict[float, np.ndarray]
    shock_distance: dict[float, np.ndarray]
    kept: np.ndarray
    trend_ok: np.ndarray
    ensembles: dict[float, FlowEnsemble] = field(repr=False)
    diagnostics: dict[float, FlowDiagnostics] = field(default_factory=dict)
    c0: float = math.nan
    c_used: float = math.nan

    @property
    def trend_fraction(self) -> float:
        n = int(self.kept.sum())
        return float((self.trend_ok & self.kept).sum() / n) if n else math.nan

    def summary(self) -> dict:
        return {
            "epsilons": self.epsilons, "t_max": self.t_max, "c0": self.c0, "c_used": self.c_used,
            "kept_starts": int(self.kept.sum()), "n_starts": int(self.starts.size),
            "trend_fraction": self.trend_fraction,
            "diagnostics": {repr(e): d.to_dict() for e, d in self.diagnostics.items()},
        }


def measured_semiconcavity(sol: FrontTrackedSolution, times: Sequence[float],
                           lo: float, hi: float, dx: float = 0.01, x_anchor: float | None = None) -> float:
    """max over times of the semiconcavity constant of the tracked f on [lo, hi]."""
    x_anchor = lo - 1.0 if x_anchor is None else x_anchor
    f = hj_function(sol, x_anchor)
    n = int(round((hi - lo) / dx)) + 1
    g = grid_from_function(f, times, lo, dx, n)
    return max(semiconcavity_constant(row, dx) for row in g.values)


def flow_study(
    sol: FrontTrackedSolution,
    epsilons: Sequence[float],
    starts: Sequence[float],
    t_max: float,
    tube_factor: float = 2.0,
    dt: float | None = None,
    c: float | None = None,
    semiconcavity_window: Sequence[float] | None = None,
) -> FlowStudy:
    """Mollified flows of the tracked f for each epsilon, with diagnostics.

    A start is kept for the residual trend when its trajectory stays at least
    ``tube_factor * epsilon`` away from every live shock for every epsilon.
    Without an explicit ``c`` the determinant constant is c0 max|H''| over
    [-Lip f, Lip f], with c0 measured on ``semiconcavity_window`` (default:
    the whole non-constant part of v0 plus a margin).
    """
    starts = np.asarray(starts, dtype=float)
    flux = sol.flux
    lo, hi = sol.v0.value_range
    lip = max(abs(lo), abs(hi))
    c0 = math.nan
    if c is None:
        knots = sol.v0._x
        win = semiconcavity_window or (float(knots[0]) - 2.0, float(knots[-1]) + 2.0)
        times = np.linspace(0.0, t_max, 6)
        c0 = measured_semiconcavity(sol, times, *win)
        c = c0 * flux.max_abs_second_derivative(-lip, lip)

    def limit(t, x):
        return flux.evaluate(eval_solution(sol, t, x), 1)

    residuals, dist, ensembles, diags = {}, {}, {}, {}
    kept = np.ones(starts.size, dtype=bool)
    for eps in epsilons:
        field_eps = mollify_profile(sol, eps, flux)
        step = dt if dt is not None else suggested_step(field_eps, starts)
        ens = integrate_flow(field_eps, starts, t_max, dt=step, check=False)
        d = np.full(starts.size, np.inf)
        for n, t in enumerate(ens.times):
            for s in sol.alive_shocks(float(t)):
                d = np.minimum(d, np.abs(ens.trajectories[:, n] - float(s.position(float(t)))))
        residuals[eps] = ensemble_integral_residuals(ens, limit)
        dist[eps] = d
        kept &= d >= tube_factor * eps
        ensembles[eps] = ens
        diags[eps] = flow_diagnostics(ens, None, None, flux, c)
    order = sorted(epsilons, reverse=True)
    trend = np.ones(starts.size, dtype=bool)
    for big, small in zip(order[:-1], order[1:]):
        trend &= residuals[small] <= residuals[big] + 1e-12
    return FlowStudy(epsilons=list(order), starts=starts, t_max=t_max, residuals=residuals,
                     shock_distance=dist, kept=kept, trend_ok=trend, ensembles=ensembles,
                     diagnostics=diags, c0=c0, c_used=c)
