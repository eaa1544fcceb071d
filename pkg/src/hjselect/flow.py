"""Mollified characteristic flows and the comparison diagnostics built on them.

Given f(t, .) with slope f_x, the regularized field is

    f_eps = f * eta_eps,   b_eps = -H'(d/dx f_eps),

with eta_eps(y) = (C / eps) exp(1 / ((y/eps)^2 - 1)) on |y| < eps.  Trajectories
X' = b_eps(t, X) are integrated together with the scalar Jacobian
J' = (d/dx b_eps) J and with log J accumulated separately as the integral of
the divergence, which gives an independent consistency check.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import StepTooLarge
from .flux import PiecewiseCubicFlux
from .profiles import PiecewiseLinearProfile

_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)
# fixed panels of the kernel support, in units of epsilon
_PANELS = (-1.0, -0.5, 0.0, 0.5, 1.0)


@lru_cache(maxsize=1)
def mollifier_constant() -> float:
    """C such that C exp(1/(x^2 - 1)) integrates to one over (-1, 1)."""
    mass, _ = quad(lambda s: math.exp(1.0 / (s * s - 1.0)), -1.0, 1.0,
                   epsabs=1e-14, epsrel=1e-13)
    return 1.0 / mass


def eta(y, epsilon: float, order: int = 0):
    """The mollifier eta_eps (order 0) or its derivative (order 1)."""
    s = np.asarray(y, dtype=float) / epsilon
    inside = np.abs(s) < 1.0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        core = np.where(inside, np.exp(1.0 / (s * s - 1.0)), 0.0)
        if order == 0:
            out = mollifier_constant() / epsilon * core
        elif order == 1:
            out = np.where(inside, mollifier_constant() / epsilon**2 * core
                           * (-2.0 * s / (s * s - 1.0) ** 2), 0.0)
        else:
            raise ValueError("order must be 0 or 1")
    return float(out) if out.ndim == 0 else out


@dataclass
class MollifiedField:
    """Convolution of f(t, .) with eta_eps and the velocity field it induces.

    ``slope(t, x)`` returns f_x at an array of points; ``breaks(t)`` lists the
    points where f_x jumps, so that quadrature panels never straddle them.
    """

    epsilon: float
    flux: PiecewiseCubicFlux
    slope: Callable[[float, np.ndarray], np.ndarray]
    breaks: Callable[[float], Sequence[float]] | None = None
    value: Callable[[float, np.ndarray], np.ndarray] | None = None
    lipschitz: float = math.inf
    base_profile: object = None
    C: float = field(default_factory=mollifier_constant)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def _panels(self, t: float, x: np.ndarray):
        """Quadrature nodes p = x - y and weights for the kernel and its derivative."""
        eps = self.epsilon
        cuts = [np.full_like(x, c * eps) for c in _PANELS]
        if self.breaks is not None:
            for b in self.breaks(t):
                cuts.append(np.clip(x - b, -eps, eps))
        cuts = np.sort(np.stack(cuts, axis=1), axis=1)
        a, b = cuts[:, :-1], cuts[:, 1:]
        width = b - a
        y = 0.5 * (a + b)[..., None] + 0.5 * width[..., None] * _GL_X
        w = 0.5 * width[..., None] * _GL_W
        # panels thinner than this carry no mass and would sample on a jump
        live = np.broadcast_to((width > 1e-11)[..., None], y.shape)
        return x[:, None, None] - y, y, w, live

    def _convolve(self, t: float, x, order: int):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        p, y, w, live = self._panels(t, x_arr)
        g = np.zeros(p.shape)
        g[live] = self.slope(t, p[live])
        out = np.sum(g * eta(y, self.epsilon, order) * w, axis=(1, 2))
        return float(out[0]) if np.ndim(x) == 0 else out

    def gradient(self, t: float, x):
        """d/dx f_eps."""
        return self._convolve(t, x, 0)

    def curvature(self, t: float, x):
        """d^2/dx^2 f_eps, by moving the derivative onto the kernel."""
        return self._convolve(t, x, 1)

    def velocity(self, t: float, x):
        return -self.flux.evaluate(self.gradient(t, x), 1)

    def divergence(self, t: float, x):
        g = self.gradient(t, x)
        return -self.flux.evaluate(g, 2) * self.curvature(t, x)

    def velocity_and_divergence(self, t: float, x):
        g, k = self.gradient(t, x), self.curvature(t, x)
        return -self.flux.evaluate(g, 1), -self.flux.evaluate(g, 2) * k

    def speed_bound(self) -> float:
        lip = self.lipschitz
        if not math.isfinite(lip):
            return math.inf
        return self.flux.max_abs_derivative(-lip, lip)


def mollify_profile(f, epsilon: float, flux: PiecewiseCubicFlux, *,
                    slope: Callable | None = None, breaks: Callable | None = None,
                    lipschitz: float | None = None) -> MollifiedField:
    """Build the mollified field of ``f``.

    ``f`` may be a :class:`PiecewiseLinearProfile` (time independent), a
    front-tracked solution (then f_x = -v and shocks are the breaks), or a
    callable f(t, x) accompanied by ``slope``.
    """
    from .front_tracking import FrontTrackedSolution, hj_function

    if isinstance(f, PiecewiseLinearProfile):
        knots = f._x
        pieces = f.pieces()
        slopes = np.array([p[2] for p in pieces])

        def prof_slope(t, x):
            return slopes[np.searchsorted(knots, x, side="right")]

        return MollifiedField(epsilon, flux, prof_slope, breaks=lambda t: knots,
                              value=lambda t, x: f(x), lipschitz=f.lipschitz, base_profile=f)
    if isinstance(f, FrontTrackedSolution):
        from .front_tracking import eval_solution

        def ft_slope(t, x):
            return -eval_solution(f, t, x)

        def ft_breaks(t):
            return [float(s.position(t)) for s in f.alive_shocks(t)]

        lo, hi = f.v0.value_range
        x_anchor = float(f.v0._x[0]) - 1.0
        return MollifiedField(epsilon, flux, ft_slope, breaks=ft_breaks,
                              value=hj_function(f, x_anchor), lipschitz=max(abs(lo), abs(hi)),
                              base_profile=f)
    if slope is None:
        raise ValueError("a callable f needs an explicit slope")
    return MollifiedField(epsilon, flux, slope, breaks=breaks, value=f,
                          lipschitz=math.inf if lipschitz is None else lipschitz, base_profile=f)


def velocity_field(field: MollifiedField, t: float, x):
    """b_eps(t, x) = -H'(d/dx f_eps(t, x))."""
    return field.velocity(t, x)


# -- ensembles -----------------------------------------------------------------


@dataclass
class FlowEnsemble:
    starts: np.ndarray
    dt: float
    times: np.ndarray
    trajectories: np.ndarray
    jacobian_dets: np.ndarray
    log_jacobian_integral: np.ndarray
    epsilon: float
    t_start: float = 0.0
    step_check: float = 0.0

    @property
    def n_members(self) -> int:
        return len(self.starts)

    def identity_defect(self) -> float:
        """max |log J - integral of div b| over all samples."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return float(np.nanmax(np.abs(np.log(self.jacobian_dets) - self.log_jacobian_integral)))


class _LinearField:
    """b(t, x) = -k x + c, handy for closed-form checks."""

    def __init__(self, k: float, c: float = 0.0, epsilon: float = 1.0):
        self.k, self.c, self.epsilon = k, c, epsilon

    def velocity_and_divergence(self, t, x):
        x = np.asarray(x, dtype=float)
        return -self.k * x + self.c, np.full_like(x, -self.k)

    def velocity(self, t, x):
        return self.velocity_and_divergence(t, x)[0]

    def divergence(self, t, x):
        return self.velocity_and_divergence(t, x)[1]


def linear_field(k: float, c: float = 0.0) -> _LinearField:
    return _LinearField(k, c)


def _rk4(field, starts, t_start, t_max, dt, save_every):
    n = int(math.ceil((t_max - t_start) / dt - 1e-9))
    h = (t_max - t_start) / n if n else 0.0
    x = np.array(starts, dtype=float)
    J = np.ones_like(x)
    G = np.zeros_like(x)
    xs, Js, Gs, ts = [x.copy()], [J.copy()], [G.copy()], [t_start]

    def rhs(t, x, J):
        b, d = field.velocity_and_divergence(t, x)
        return b, d * J, d

    t = t_start
    for k in range(n):
        k1 = rhs(t, x, J)
        k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1[0], J + 0.5 * h * k1[1])
        k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2[0], J + 0.5 * h * k2[1])
        k4 = rhs(t + h, x + h * k3[0], J + h * k3[1])
        x = x + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        J = J + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        G = G + h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        t = t_start + (k + 1) * h
        if (k + 1) % save_every == 0 or k == n - 1:
            xs.append(x.copy())
            Js.append(J.copy())
            Gs.append(G.copy())
            ts.append(t)
    return (np.array(ts), np.array(xs).T, np.array(Js).T, np.array(Gs).T, h)


def integrate_flow(
    field,
    starts: Sequence[float],
    t_max: float,
    dt: float | None = None,
    t_start: float = 0.0,
    save_every: int = 1,
    check_tol: float = 1e-6,
    check: bool = True,
) -> FlowEnsemble:
    """RK4 on (X, J, log J) for every start.

    With ``check`` the run is repeated at half the step; if final positions
    differ by more than ``check_tol`` :class:`StepTooLarge` is raised.
    """
    if dt is None:
        dt = suggested_step(field, starts, t_start)
    ts, X, J, G, h = _rk4(field, starts, t_start, t_max, dt, save_every)
    defect = 0.0
    if check:
        _, X2, _, _, _ = _rk4(field, starts, t_start, t_max, dt / 2, 2 * save_every)
        defect = float(np.max(np.abs(X2[:, -1] - X[:, -1])))
        if defect > check_tol:
            raise StepTooLarge(f"step halving moved trajectories by {defect:.3e} > {check_tol}")
    return FlowEnsemble(starts=np.asarray(starts, dtype=float), dt=h, times=ts, trajectories=X,
                        jacobian_dets=J, log_jacobian_integral=G, epsilon=field.epsilon,
                        t_start=t_start, step_check=defect)


def suggested_step(field, starts, t: float = 0.0, n_probe: int = 401) -> float:
    """eps / (10 max |d/dx b_eps|), probing around the starts at time t."""
    s = np.asarray(starts, dtype=float)
    probes = np.linspace(s.min() - 1.0, s.max() + 1.0, n_probe)
    div = float(np.max(np.abs(field.divergence(t, probes))))
    return field.epsilon / (10.0 * max(div, 1.0))


# -- W-flow and diagnostics ------------------------------------------------------


def w_flow(flux: PiecewiseCubicFlux, u0_grad, t: float, x, horizon: float | None = None):
    """W(t, x) = x - t H'(u0'(x)) for a gradient callable or profile ``u0_grad``."""
    if horizon is not None and t >= horizon:
        raise ValueError(f"t={t} is past the injectivity horizon {horizon}")
    x_arr = np.asarray(x, dtype=float)
    out = x_arr - t * flux.evaluate(u0_grad(x_arr), 1)
    return float(out) if np.ndim(out) == 0 else out


def w_horizon(flux: PiecewiseCubicFlux, u0_grad, lo: float, hi: float, n: int = 20001) -> float:
    """1 / Lip(H'(u0')) estimated from difference quotients on [lo, hi]."""
    x = np.linspace(lo, hi, n)
    c = flux.evaluate(u0_grad(x), 1)
    lip = float(np.max(np.abs(np.diff(c)) / np.diff(x)))
    return math.inf if lip == 0 else 1.0 / lip


@dataclass
class FlowDiagnostics:
    det_bound_ok: bool
    det_bound_margin: float
    repulsion_ok: bool
    repulsion_worst_ratio: float
    repulsion_kappa: float
    monotone_up_along_W: float
    monotone_down_along_X: float
    c_used: float
    identity_defect: float
    w_checked: bool = False

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in asdict(self).items()}


def flow_diagnostics(
    ensemble: FlowEnsemble,
    f: Callable[[float, np.ndarray], np.ndarray] | None,
    u: Callable[[float, np.ndarray], np.ndarray] | None,
    flux: PiecewiseCubicFlux,
    c: float,
    w_starts: Sequence[float] | None = None,
    w_times: Sequence[float] | None = None,
    u0_grad=None,
    exclude: Callable[[float, np.ndarray], np.ndarray] | None = None,
) -> FlowDiagnostics:
    """Determinant bound, pair repulsion and the two monotonicity checks.

    * ``det_bound_margin`` is max J^-1 e^{-c t} - 1 (the bound holds when <= 1e-6).
    * ``repulsion_kappa`` is the smallest kappa with |X(x) - X(y)| >= |x - y| e^{-kappa c t}
      over adjacent start pairs; ``repulsion_ok`` means kappa <= 1, the rate
      implied by the determinant bound in one dimension.
    * ``monotone_up_along_W`` is the worst step decrease of (f - u)(t, W(t, x));
      ``monotone_down_along_X`` the worst step increase of (f - u) along X.
    ``exclude(t, x)`` masks samples (for instance near shocks) out of the f - u checks.
    """
    ts = ensemble.times - ensemble.t_start
    J = ensemble.jacobian_dets
    with np.errstate(over="ignore", divide="ignore"):
        ratio = (1.0 / J) * np.exp(-c * ts)[None, :]
    margin = float(np.max(ratio) - 1.0)

    X = ensemble.trajectories
    order = np.argsort(ensemble.starts)
    xs, Xs = ensemble.starts[order], X[order]
    gap0 = np.diff(xs)[:, None]
    gap = np.abs(np.diff(Xs, axis=0))
    worst_ratio = float(np.min(gap / gap0)) if len(xs) > 1 else 1.0
    kappa = 0.0
    if len(xs) > 1 and c > 0:
        with np.errstate(divide="ignore", invalid="ignore"):
            k = -np.log(gap / gap0) / (c * ts[None, :])
        k = k[:, ts > 0]
        kappa = float(np.nanmax(k)) if k.size else 0.0
        kappa = max(kappa, 0.0)

    up = 0.0
    down = 0.0
    w_checked = False
    if f is not None and u is not None:
        if w_starts is not None and w_times is not None and u0_grad is not None:
            prev = None
            for t in w_times:
                pos = w_flow(flux, u0_grad, t, np.asarray(w_starts, dtype=float))
                d = f(t, pos) - u(t, pos)
                if exclude is not None:
                    d = np.where(exclude(t, pos), np.nan, d)
                if prev is not None:
                    up = max(up, float(np.nanmax(prev - d)))
                prev = d
            w_checked = True
        prev = None
        for n, t in enumerate(ensemble.times):
            pos = X[:, n]
            d = f(t, pos) - u(t, pos)
            if exclude is not None:
                d = np.where(exclude(t, pos), np.nan, d)
            if prev is not None:
                down = max(down, float(np.nanmax(d - prev)))
            prev = d
    return FlowDiagnostics(
        det_bound_ok=margin <= 1e-6, det_bound_margin=margin,
        repulsion_ok=kappa <= 1.0 + 1e-6, repulsion_worst_ratio=worst_ratio, repulsion_kappa=kappa,
        monotone_up_along_W=up, monotone_down_along_X=down, c_used=c,
        identity_defect=ensemble.identity_defect(), w_checked=w_checked,
    )


def _residual_from_values(times, gamma, vals):
    ok = np.isfinite(vals)
    tt, gg, vv = times[ok], gamma[ok], vals[ok]
    if tt.size < 2:
        return math.nan
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (vv[1:] + vv[:-1]) * np.diff(tt))])
    return float(np.max(np.abs(gg - gg[0] - integral)))


def integral_residual(times, trajectory, field_limit: Callable[[float, float], float]) -> float:
    """sup_t |gamma(t) - gamma(0) - integral_0^t b(s, gamma(s)) ds|, trapezoid rule.

    Samples where ``field_limit`` fails or returns NaN are dropped and the
    quadrature runs over the remaining nodes.
    """
    times = np.asarray(times, dtype=float)
    gamma = np.asarray(trajectory, dtype=float)
    vals = np.empty_like(times)
    for i, (t, g) in enumerate(zip(times, gamma)):
        try:
            vals[i] = float(field_limit(t, g))
        except Exception:
            vals[i] = np.nan
    return _residual_from_values(times, gamma, vals)


def ensemble_integral_residuals(ensemble: FlowEnsemble, field_limit) -> np.ndarray:
    """:func:`integral_residual` for every member, evaluating ``field_limit`` per time slice."""
    X = ensemble.trajectories
    vals = np.empty_like(X)
    for n, t in enumerate(ensemble.times):
        try:
            vals[:, n] = field_limit(t, X[:, n])
        except Exception:
            for m in range(X.shape[0]):
                try:
                    vals[m, n] = float(field_limit(t, X[m, n]))
                except Exception:
                    vals[m, n] = np.nan
    return np.array([_residual_from_values(ensemble.times, X[m], vals[m])
                     for m in range(X.shape[0])])
