"""Reference entropy and viscosity solutions.

* Godunov's scheme for v_t + H(v)_x = 0, exact for non-convex H because the
  interface flux is a min/max of H over the interval between the two states.
* The Hopf-Lax formula for u_t - H(u_x) = 0 with convex H.
* The map v = -u_x between the two pictures, anchored in a constant region.

Sign convention for Hopf-Lax: with u_t = H(u_x), the function w = -u solves
w_t + H(-w_x) = 0, whose Hamiltonian p -> H(-p) has conjugate q -> H*(-q).
The textbook formula for w then gives

    u(t, x) = sup_y [ u0(y) - t H*((y - x) / t) ],

which reduces to x + t/2 for u0 = x and to x^2 / (2 (1 - t)) for u0 = x^2/2
when H = p^2/2.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .errors import AnchorInvaded, SearchIntervalTooSmall, UnpaddedDomain
from .flux import (
    PiecewiseCubicFlux,
    _check_concave_objective,
    golden_section_max,
    legendre_conjugate,
)
from .profiles import PiecewiseLinearProfile


@dataclass
class GridSolution:
    """Space-time samples on a uniform spatial grid.

    ``values[n, i]`` is the field at ``times[n]`` and ``x[i]``; for cell
    averages ``x`` holds the cell centres x_min + (i + 1/2) dx, for nodal
    grids the nodes x_min + i dx.
    """

    x_min: float
    dx: float
    t_min: float
    dt: float
    values: np.ndarray
    kind: str = "cell_average"
    times: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    mass: np.ndarray | None = None
    ledger_error: float = 0.0

    def __post_init__(self):
        if not (self.dx > 0 and self.dt > 0):
            raise ValueError("dx and dt must be positive")
        if self.kind not in ("cell_average", "nodal"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.times is None:
            self.times = self.t_min + self.dt * np.arange(self.values.shape[0])
        self.times = np.asarray(self.times, dtype=float)

    @property
    def cells(self) -> int:
        return self.values.shape[1]

    @property
    def x(self) -> np.ndarray:
        offset = 0.5 if self.kind == "cell_average" else 0.0
        return self.x_min + (np.arange(self.cells) + offset) * self.dx

    @property
    def edges(self) -> np.ndarray:
        return self.x_min + np.arange(self.cells + 1) * self.dx

    def frame_index(self, t: float, tol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"no stored frame at t={t}")
        return i

    def frame(self, t: float) -> np.ndarray:
        return self.values[self.frame_index(t)]

    def interp(self, t: float, x) -> np.ndarray:
        """Linear interpolation in x on the stored frame at time t."""
        return np.interp(x, self.x, self.frame(t))

    def to_csv(self, path=None, stride: int = 1) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "value"])
        xs = self.x[::stride]
        for n, t in enumerate(self.times):
            for xv, val in zip(xs, self.values[n, ::stride]):
                w.writerow([repr(float(t)), repr(float(xv)), repr(float(val))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_json(self) -> str:
        meta = {"dx": self.dx, "dt": self.dt, "cells": self.cells}
        meta.update(self.metadata)
        return json.dumps({
            "kind": self.kind, "x_min": self.x_min, "t_min": self.t_min,
            "metadata": meta, "times": self.times.tolist(),
            "values": self.values.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "GridSolution":
        d = json.loads(text)
        meta = dict(d.get("metadata", {}))
        dx, dt = meta.pop("dx"), meta.pop("dt")
        meta.pop("cells", None)
        return cls(x_min=d["x_min"], dx=dx, t_min=d.get("t_min", 0.0), dt=dt,
                   values=np.array(d["values"]), kind=d.get("kind", "nodal"),
                   times=np.array(d["times"]) if "times" in d else None, metadata=meta)


# -- Godunov ----------------------------------------------------------------


def _critical_table(flux: PiecewiseCubicFlux) -> tuple[np.ndarray, np.ndarray]:
    crit = flux.critical_values()
    return crit, np.asarray(flux.evaluate(crit), dtype=float).reshape(-1)


def godunov_flux(flux: PiecewiseCubicFlux, v_left, v_right):
    """Exact Godunov flux: min of H on [vL, vR] if vL <= vR, else max on [vR, vL]."""
    vl = np.asarray(v_left, dtype=float)
    vr = np.asarray(v_right, dtype=float)
    lo, hi = np.minimum(vl, vr), np.maximum(vl, vr)
    hl, hr = flux(vl), flux(vr)
    fmin, fmax = np.minimum(hl, hr), np.maximum(hl, hr)
    for c, hc in zip(*_critical_table(flux)):
        inside = (lo < c) & (c < hi)
        fmin = np.where(inside, np.minimum(fmin, hc), fmin)
        fmax = np.where(inside, np.maximum(fmax, hc), fmax)
    out = np.where(vl <= vr, fmin, fmax)
    return float(out) if out.ndim == 0 else out


@njit(cache=True)
def _h(bp, coef, p):
    i = 0
    while i < bp.shape[0] and bp[i] < p:
        i += 1
    c = coef[i]
    return ((c[0] * p + c[1]) * p + c[2]) * p + c[3]


@njit(cache=True)
def _godunov_steps(v, bp, coef, crit, hcrit, dt, dx, n_steps, v_first, v_last):
    """Advance the padded state ``v`` (ghosts at both ends) n_steps in place.

    Returns (boundary flux integral in - out, worst drift of the first and
    last physical cells from v_first / v_last).
    """
    m = v.shape[0]
    fl = np.empty(m - 1)
    hv = np.empty(m)
    boundary = 0.0
    drift = 0.0
    lam = dt / dx
    for _ in range(n_steps):
        for i in range(m):
            hv[i] = _h(bp, coef, v[i])
        for i in range(m - 1):
            a = v[i]
            b = v[i + 1]
            if a <= b:
                f = min(hv[i], hv[i + 1])
                for j in range(crit.shape[0]):
                    if a < crit[j] < b and hcrit[j] < f:
                        f = hcrit[j]
            else:
                f = max(hv[i], hv[i + 1])
                for j in range(crit.shape[0]):
                    if b < crit[j] < a and hcrit[j] > f:
                        f = hcrit[j]
            fl[i] = f
        for i in range(1, m - 1):
            v[i] -= lam * (fl[i] - fl[i - 1])
        boundary += dt * (fl[0] - fl[m - 2])
        d = max(abs(v[1] - v_first), abs(v[m - 2] - v_last))
        if d > drift:
            drift = d
    return boundary, drift


def godunov_solve(
    flux: PiecewiseCubicFlux,
    v0: PiecewiseLinearProfile,
    domain: Sequence[float],
    t_max: float,
    cells: int,
    cfl: float = 0.45,
    save_every: int | None = None,
    save_times: Sequence[float] | None = None,
    flux_id: str | None = None,
    drift_tol: float = 1e-10,
) -> GridSolution:
    """First-order Godunov finite volumes with exact Riemann fluxes.

    The time step is cfl * dx / max|H'| over the range of v0; frames are kept
    every ``save_every`` steps or exactly at ``save_times`` (steps are
    shortened to land on them), plus the initial and final states.  Ghost
    cells carry the far-field constants of v0.
    """
    if not 0 < cfl < 1:
        raise ValueError(f"cfl must lie in (0, 1), got {cfl}")
    if cells < 100:
        raise ValueError("cells must be at least 100")
    x_min, x_max = float(domain[0]), float(domain[1])
    dx = (x_max - x_min) / cells
    edges = x_min + dx * np.arange(cells + 1)
    lo, hi = v0.value_range
    speed = flux.max_abs_derivative(lo, hi)
    dt = cfl * dx / speed if speed > 0 else t_max
    bp = np.array(flux._bp_list, dtype=float)
    coef = np.array(flux._coef_list, dtype=float).reshape(-1, 4)
    crit, hcrit = _critical_table(flux)

    v = np.empty(cells + 2)
    v[1:-1] = v0.cell_averages(edges)
    v[0], v[-1] = float(v0.left_extension), float(v0.right_extension)
    v_first, v_last = v[1], v[-2]

    if save_times is not None:
        targets = sorted({float(s) for s in save_times if 0 < s < t_max} | {float(t_max)})
    else:
        every = save_every or max(1, int(math.ceil(t_max / dt)))
        n_total = int(math.ceil(t_max / dt - 1e-9))
        targets = sorted({min(k * dt, t_max) for k in range(every, n_total, every)} | {float(t_max)})

    frames, times = [v[1:-1].copy()], [0.0]
    mass = [float(np.sum(v[1:-1]) * dx)]
    boundary_total = 0.0
    worst_drift = 0.0
    t = 0.0
    for target in targets:
        n = int(math.ceil((target - t) / dt - 1e-9))
        if n <= 0:
            continue
        h = (target - t) / n
        b, d = _godunov_steps(v, bp, coef, crit, hcrit, h, dx, n, v_first, v_last)
        boundary_total += b
        worst_drift = max(worst_drift, d)
        if worst_drift > drift_tol:
            raise UnpaddedDomain(
                f"boundary cell drifted by {worst_drift:.3e} before t={target}; widen the domain"
            )
        t = target
        frames.append(v[1:-1].copy())
        times.append(t)
        mass.append(float(np.sum(v[1:-1]) * dx))
    mass = np.array(mass)
    # the boundary flux ledger is only kept in total
    ledger = abs(mass[-1] - mass[0] - boundary_total) / max(1.0, abs(mass[0]))
    return GridSolution(
        x_min=x_min, dx=dx, t_min=0.0, dt=dt, values=np.array(frames), kind="cell_average",
        times=np.array(times), mass=mass, ledger_error=float(ledger),
        metadata={"cfl": cfl, "flux_id": flux_id or flux.name},
    )


# -- Hopf-Lax ----------------------------------------------------------------


def hopf_lax_eval(
    flux: PiecewiseCubicFlux,
    u0: Callable[[float], float] | PiecewiseLinearProfile,
    t: float,
    x: float,
    search_interval: Sequence[float],
    tol: float = 1e-10,
    p_interval: Sequence[float] | None = None,
    n_grid: int = 401,
) -> float:
    """u(t, x) = sup_y [u0(y) - t H*((y - x)/t)] for u_t - H(u_x) = 0.

    ``p_interval`` is where H is convex and where the conjugate's sup is taken;
    by default it is [-Lip(u0), Lip(u0)] for profiles and wide enough to cover
    every slope (y - x)/t of the search interval otherwise.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    lo, hi = float(search_interval[0]), float(search_interval[1])
    if p_interval is None:
        if isinstance(u0, PiecewiseLinearProfile):
            lip = max(u0.lipschitz, 1e-12)
            p_interval = (-lip, lip)
        else:
            q = max(abs(lo - x), abs(hi - x)) / t
            p_interval = (-q - 1.0, q + 1.0)
    p_lo, p_hi = float(p_interval[0]), float(p_interval[1])
    _check_concave_objective(flux, p_lo, p_hi)
    u0_fn = u0.value if isinstance(u0, PiecewiseLinearProfile) else u0

    def objective(y):
        return u0_fn(y) - t * legendre_conjugate(flux, (y - x) / t, (p_lo, p_hi), tol=1e-13,
                                                 check=False)

    ys = np.linspace(lo, hi, n_grid)
    vals = np.array([objective(y) for y in ys])
    k = int(np.argmax(vals))
    if k == 0 or k == n_grid - 1:
        raise SearchIntervalTooSmall(
            f"maximizer at the search-interval endpoint y={ys[k]:.6g}; enlarge the interval"
        )
    y_best, v_best = golden_section_max(objective, ys[k - 1], ys[k + 1], tol=tol)
    if min(y_best - lo, hi - y_best) < tol:
        raise SearchIntervalTooSmall(f"maximizer within {tol} of the search-interval endpoint")
    return float(max(v_best, vals[k]))


# -- correspondence ------------------------------------------------------------


@dataclass(frozen=True)
class CorrespondenceAnchor:
    """Point in a constant region where the improper integral is pinned."""

    x_anchor: float
    u_at_anchor_t0: float
    anchor_state: float


def cl_to_hj(v: GridSolution, anchor: CorrespondenceAnchor, flux: PiecewiseCubicFlux,
             tol: float = 1e-8) -> GridSolution:
    """u(t, x) = u(t, x_anchor) - integral of v from x_anchor to x, at cell centres.

    The anchor value evolves by u_t = H(v) with v frozen at the anchor state.
    """
    if v.kind != "cell_average":
        raise ValueError("cl_to_hj expects a conservation-law grid")
    j = int(math.floor((anchor.x_anchor - v.x_min) / v.dx))
    if not 0 <= j < v.cells:
        raise AnchorInvaded(f"anchor {anchor.x_anchor} lies outside the grid")
    dev = float(np.max(np.abs(v.values[:, j] - anchor.anchor_state)))
    if dev > tol:
        raise AnchorInvaded(f"v deviates from the anchor state by {dev:.3e} at the anchor")
    vals = v.values
    # integral from x_min to each centre (midpoint rule)
    cum = np.cumsum(vals, axis=1) * v.dx - 0.5 * vals * v.dx
    at_anchor = (np.cumsum(vals, axis=1)[:, j] - vals[:, j]) * v.dx + \
        (anchor.x_anchor - (v.x_min + j * v.dx)) * vals[:, j]
    u_anchor = anchor.u_at_anchor_t0 + v.times * float(flux(anchor.anchor_state))
    u = u_anchor[:, None] - (cum - at_anchor[:, None])
    meta = dict(v.metadata)
    meta["anchor"] = [anchor.x_anchor, anchor.u_at_anchor_t0, anchor.anchor_state]
    return GridSolution(x_min=v.x_min + 0.5 * v.dx, dx=v.dx, t_min=v.t_min, dt=v.dt,
                        values=u, kind="nodal", times=v.times.copy(), metadata=meta)


def hj_to_cl(u: GridSolution) -> GridSolution:
    """v = -u_x by central differences (one-sided at the ends), read as cell averages."""
    if u.kind != "nodal":
        raise ValueError("hj_to_cl expects a nodal grid")
    v = -np.gradient(u.values, u.dx, axis=1)
    return GridSolution(x_min=u.x_min - 0.5 * u.dx, dx=u.dx, t_min=u.t_min, dt=u.dt,
                        values=v, kind="cell_average", times=u.times.copy(),
                        metadata=dict(u.metadata))
