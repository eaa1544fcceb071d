from __future__ import annotations

import numpy as np
import pytest

from hjselect.flux import build_paper_flux, quadratic_flux
from hjselect.front_tracking import hj_function
from hjselect.regularity import (
    grid_from_function,
    lipschitz_components,
    lipschitz_constant,
    one_sided_lipschitz_constant,
    pde_residual,
    regularity_report,
    semiconcavity_constant,
    semiconcavity_refinement,
)


def test_lipschitz_examples():
    g = grid_from_function(lambda t, x: x + t / 2, np.linspace(0, 1, 11), -1.0, 0.01, 201)
    space, time = lipschitz_components(g)
    assert space == pytest.approx(1.0) and time == pytest.approx(0.5)
    assert lipschitz_constant(g) == pytest.approx(1.0)
    c = grid_from_function(lambda t, x: np.full_like(x, 3.0), [0.0, 1.0], 0.0, 0.1, 10)
    assert lipschitz_constant(c) == 0.0


def test_semiconcavity_kinks():
    x = np.linspace(-1, 1, 201)
    h = x[1] - x[0]
    assert semiconcavity_constant(-np.abs(x), h) <= 1e-9
    up = semiconcavity_refinement(np.abs, -1.0, 1.0, 0.01, levels=3)
    assert up[0] == pytest.approx(1 / 0.01, rel=1e-6)
    assert up[2] == pytest.approx(4 * up[0], rel=1e-6)
    smooth = semiconcavity_refinement(lambda s: 0.5 * s * s, -1, 1, 0.01, levels=3)
    assert np.allclose(smooth, 0.5, atol=1e-6)


def test_one_sided_lipschitz():
    x = np.linspace(-1, 1, 101)
    h = x[1] - x[0]
    assert one_sided_lipschitz_constant(np.tanh(x), h) == 0.0
    assert one_sided_lipschitz_constant(-x, h) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        one_sided_lipschitz_constant(x)


def test_pde_residual_smooth_and_affine():
    Q = quadratic_flux()
    times = np.linspace(0, 0.4, 41)
    g = grid_from_function(lambda t, x: x**2 / (2 * (1 - t)), times, -1.0, 0.01, 201)
    r = pde_residual(g, Q)
    assert r.max <= 1e-3 and r.excluded_fraction == 0.0
    a = grid_from_function(lambda t, x: 2 * x + 2 * t, times, -1.0, 0.01, 201)
    assert pde_residual(a, Q).max <= 1e-12
    with pytest.raises(ValueError):
        pde_residual(grid_from_function(lambda t, x: x, [0, 0.1, 0.3], 0, 0.1, 5), Q)


def test_counterexample_regularity(paper_solution):
    d = paper_solution.derived_constants
    t3 = d["t3"]
    dx = 0.01
    times = t3 + 0.01 * np.arange(5)
    f = hj_function(paper_solution, 10.0)
    g = grid_from_function(f, times, 12.0, dx, 901)

    def shocks(t):
        return [float(s.position(t)) for s in paper_solution.alive_shocks(t)]

    rep = regularity_report(g, paper_solution.flux, shocks)
    assert rep.lipschitz <= 1.5 + 1e-6
    assert rep.excluded_fraction < 0.05
    assert rep.pde_residual_quantiles[1] <= 10 * dx
    assert rep.semiconcavity_c < 0.01
    # the upward gradient kink of f at the shock makes -f fail semiconcavity
    semiconvex = [semiconcavity_constant(-f(t3, 12.0 + h * np.arange(int(9 / h) + 1)), h)
                  for h in (0.02, 0.005)]
    # a kink anywhere in a cell gives between s / 4h and s / 2h
    assert semiconvex[1] > 2.0 * semiconvex[0]
    assert rep.to_dict()["pde_residual_quantiles"] == list(rep.pde_residual_quantiles)


def test_regularity_paper_flux_constant_data():
    g = grid_from_function(lambda t, x: np.zeros_like(x), np.linspace(0, 1, 5), 0.0, 0.1, 20)
    rep = regularity_report(g, build_paper_flux())
    assert rep.semiconcavity_c == 0.0 and rep.pde_residual_quantiles[2] == 0.0
