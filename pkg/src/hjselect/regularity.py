"""Quantitative regularity checks on sampled solutions.

Conventions: the semiconcavity constant of g is the smallest c for which
x -> c|x|^2 - g(x) is convex, so c is half the largest upward second
difference quotient.  Semiconvexity of g is semiconcavity of -g.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .flux import PiecewiseCubicFlux
from .viscosity import GridSolution

__all__ = [
    "PdeResidual",
    "RegularityReport",
    "grid_from_function",
    "lipschitz_constant",
    "lipschitz_components",
    "one_sided_lipschitz_constant",
    "pde_residual",
    "regularity_report",
    "semiconcavity_constant",
    "semiconcavity_refinement",
]


def grid_from_function(func: Callable[[float, np.ndarray], np.ndarray], times: Sequence[float],
                       x_min: float, dx: float, n: int, metadata: dict | None = None) -> GridSolution:
    """Nodal GridSolution sampling ``func(t, x)`` at x_min + i dx."""
    times = np.asarray(times, dtype=float)
    x = x_min + dx * np.arange(n)
    vals = np.array([np.asarray(func(float(t), x), dtype=float) for t in times])
    dt = float(np.median(np.diff(times))) if times.size > 1 else 1.0
    return GridSolution(x_min=x_min, dx=dx, t_min=float(times[0]), dt=dt, values=vals,
                        kind="nodal", times=times, metadata=dict(metadata or {}))


def lipschitz_components(g: GridSolution) -> tuple[float, float]:
    """(space, time) maxima of adjacent difference quotients."""
    vals = g.values
    space = float(np.max(np.abs(np.diff(vals, axis=1)))) / g.dx if vals.shape[1] > 1 else 0.0
    time = 0.0
    if vals.shape[0] > 1:
        dts = np.diff(g.times)[:, None]
        time = float(np.max(np.abs(np.diff(vals, axis=0)) / dts))
    return space, time


def lipschitz_constant(g: GridSolution) -> float:
    """Joint Lipschitz constant: the larger of the space and time quotients."""
    return max(lipschitz_components(g))


def _values_and_step(g, dx):
    if isinstance(g, GridSolution):
        if g.values.shape[0] != 1:
            raise ValueError("pass a single time frame (GridSolution with one row or an array)")
        return g.values[0], g.dx
    if dx is None:
        raise ValueError("dx is required for raw arrays")
    return np.asarray(g, dtype=float), float(dx)


def semiconcavity_constant(g, dx: float | None = None) -> float:
    """Half the positive part of the largest centred second difference quotient."""
    vals, h = _values_and_step(g, dx)
    if vals.size < 3:
        return 0.0
    d2 = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / h**2
    return max(0.0, 0.5 * float(np.max(d2)))


def semiconcavity_refinement(func: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                             dx: float, levels: int = 3) -> list[float]:
    """Semiconcavity constants of ``func`` sampled at dx, dx/2, dx/4, ...

    Bounded sequences indicate a genuine constant; growth proportional to
    1/h flags an upward kink.
    """
    out = []
    h = dx
    for _ in range(levels):
        n = int(round((hi - lo) / h)) + 1
        x = lo + h * np.arange(n)
        out.append(semiconcavity_constant(func(x), h))
        h /= 2.0
    return out


def one_sided_lipschitz_constant(v, dx: float | None = None, max_offset: int | None = None) -> float:
    """max over pairs x > y of the negative part of (v(x) - v(y)) / (x - y).

    Offsets are restricted to dx, 2dx, 4dx, ... up to ``max_offset`` cells.
    """
    vals, h = _values_and_step(v, dx)
    n = vals.size
    if max_offset is None:
        max_offset = n - 1
    c = 0.0
    k = 1
    while k <= min(max_offset, n - 1):
        q = (vals[k:] - vals[:-k]) / (k * h)
        c = max(c, float(-np.min(q)))
        k *= 2
    return c


@dataclass(frozen=True)
class PdeResidual:
    median: float
    p95: float
    max: float
    excluded_fraction: float
    n_probes: int

    @property
    def quantiles(self) -> tuple[float, float, float]:
        return self.median, self.p95, self.max


def pde_residual(
    f: GridSolution,
    flux: PiecewiseCubicFlux,
    shock_exclusion_radius: float | None = None,
    shock_positions: Callable[[float], Sequence[float]] | None = None,
) -> PdeResidual:
    """Residual of f_t - H(f_x) = 0 by centred differences at interior nodes.

    Nodes within ``shock_exclusion_radius`` (default 3 dx) of any position
    returned by ``shock_positions(t)`` are skipped.  Time samples must be
    uniformly spaced.
    """
    if f.kind != "nodal":
        raise ValueError("pde_residual expects a nodal grid")
    vals, times = f.values, f.times
    if vals.shape[0] < 3 or vals.shape[1] < 3:
        raise ValueError("need at least three time frames and three nodes")
    steps = np.diff(times)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
        raise ValueError("time samples must be uniform")
    ht = steps[0]
    ft = (vals[2:, 1:-1] - vals[:-2, 1:-1]) / (2.0 * ht)
    fx = (vals[1:-1, 2:] - vals[1:-1, :-2]) / (2.0 * f.dx)
    res = np.abs(ft - flux.evaluate(fx))
    mask = np.ones_like(res, dtype=bool)
    if shock_positions is not None:
        radius = 3.0 * f.dx if shock_exclusion_radius is None else shock_exclusion_radius
        x = f.x[1:-1]
        for n, t in enumerate(times[1:-1]):
            for z in shock_positions(float(t)):
                mask[n] &= np.abs(x - z) > radius
    kept = res[mask]
    excluded = 1.0 - kept.size / res.size
    if kept.size == 0:
        return PdeResidual(math.nan, math.nan, math.nan, excluded, 0)
    return PdeResidual(float(np.median(kept)), float(np.quantile(kept, 0.95)),
                       float(np.max(kept)), excluded, int(kept.size))


@dataclass(frozen=True)
class RegularityReport:
    lipschitz: float
    semiconcavity_c: float
    one_sided_lipschitz: float
    pde_residual_quantiles: tuple[float, float, float]
    excluded_fraction: float
    semiconcavity_by_time: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pde_residual_quantiles"] = list(self.pde_residual_quantiles)
        d["semiconcavity_by_time"] = list(self.semiconcavity_by_time)
        return d


def regularity_report(
    f: GridSolution,
    flux: PiecewiseCubicFlux,
    shock_positions: Callable[[float], Sequence[float]] | None = None,
    shock_exclusion_radius: float | None = None,
) -> RegularityReport:
    """All constants for a nodal HJ grid; v = -f_x supplies the one-sided constant."""
    per_t = tuple(semiconcavity_constant(row, f.dx) for row in f.values)
    v = -np.gradient(f.values, f.dx, axis=1)
    osl = max(one_sided_lipschitz_constant(row, f.dx) for row in v[:, 1:-1])
    res = pde_residual(f, flux, shock_exclusion_radius, shock_positions)
    return RegularityReport(
        lipschitz=lipschitz_constant(f), semiconcavity_c=max(per_t), one_sided_lipschitz=osl,
        pde_residual_quantiles=res.quantiles, excluded_fraction=res.excluded_fraction,
        semiconcavity_by_time=per_t,
    )
