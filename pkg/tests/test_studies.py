from __future__ import annotations

import numpy as np
import pytest

from hjselect.flux import quadratic_flux
from hjselect.studies import (
    GapRow,
    convex_control_solution,
    gap_study,
    richardson_error,
    reference_grid,
    w_monotone_study,
)
from hjselect.viscosity import hopf_lax_eval


def test_gap_row_ratio():
    assert GapRow(1.0, 50, 2.0, 0.5).ratio == 4.0
    assert GapRow(1.0, 50, 2.0, 0.0).ratio == float("inf")


def test_convex_control_shock():
    sol = convex_control_solution(t_end=3.0)
    (s,) = sol.shocks
    assert s.t[0] == pytest.approx(4 / 3, abs=1e-9)
    assert s.speed[-1] == pytest.approx(0.25, abs=1e-9)


def test_convex_control_gap_within_scheme_error():
    sol = convex_control_solution(t_end=3.0)
    rows, grids = gap_study(sol, [2.0, 3.0], (-3, 4), (-6, 8), [50])
    for r in rows:
        assert r.gap <= 1.1 * r.scheme_error
    with pytest.raises(ValueError):
        richardson_error(grids[50], grids[50], 2.0, -3, 4)


def test_w_monotone_convex_pair():
    Q = quadratic_flux()
    starts = np.linspace(-0.8, 0.8, 9)
    times = np.linspace(0.0, 0.6, 7)

    def f(t, x):
        return np.asarray(x) ** 2 / (2 * (1 - t))

    def u(t, x):
        if t == 0:
            return 0.5 * np.asarray(x) ** 2
        return np.array([hopf_lax_eval(Q, lambda y: 0.5 * y * y, t, xi, (xi - 10, xi + 10))
                         for xi in np.atleast_1d(x)])

    worst, final = w_monotone_study(f, u, Q, lambda y: y, starts, times)
    assert worst <= 1e-6 and final >= -1e-6


def test_reference_grid_cells():
    sol = convex_control_solution(t_end=1.0)
    g = reference_grid(sol, (-4, 4), 1.0, 25, [0.5, 1.0])
    assert g.cells == 200
