from __future__ import annotations

import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest

from hjselect.errors import ConfigError, DegenerateJump
from hjselect.flux import build_paper_flux, quadratic_flux
from hjselect.front_tracking import (
    _feet_at,
    build_single_shock_solution,
    eval_solution,
    hj_function,
    paper_constants,
    rh_residual,
    rh_speed,
)
from hjselect.profiles import riemann_profile


def test_exact_constants():
    c = paper_constants()
    assert c["a"] == Fraction(9, 4)
    assert c["t0"] == Fraction(4, 11)
    assert c["x0"] == Fraction(15, 22)
    assert c["t_c"] == Fraction(2, 13)


def test_rh_speed_examples():
    P, Q = build_paper_flux(), quadratic_flux()
    assert rh_speed(P, -1.5, -0.5) == pytest.approx(0.25, abs=1e-15)
    assert rh_speed(P, -1.5, 1.5) == pytest.approx(0.0, abs=1e-15)
    assert rh_speed(Q, 1.0, 0.0) == pytest.approx(0.5)
    with pytest.raises(DegenerateJump):
        rh_speed(Q, 1.0, 1.0)


def test_launch_state_and_speed(paper_solution):
    A = paper_solution.shock("A")
    assert A.t[0] == pytest.approx(4 / 11, abs=1e-15)
    assert A.z[0] == pytest.approx(-15 / 22, abs=1e-15)
    assert A.v_minus[0] == pytest.approx(-1.5, abs=1e-12)
    assert A.v_plus[0] == pytest.approx(-0.5, abs=1e-12)
    assert A.speed[0] == pytest.approx(0.25, abs=1e-12)


def test_merge_symmetry(paper_solution):
    A, B = paper_solution.shock("A"), paper_solution.shock("B")
    n = min(len(A.t), len(B.t))
    assert np.max(np.abs(A.z[:n] + B.z[:n])) <= 1e-8
    d = paper_solution.derived_constants
    assert d["merge_symmetric"]
    assert d["L"] == pytest.approx(2.25 * d["t1"], abs=1e-12)


def test_shock_states_jump_upward(paper_solution):
    for s in paper_solution.shocks:
        if s.label == "detected":
            assert np.all(s.v_minus[1:] >= s.v_plus[1:] - 1e-12)
        else:
            assert np.all(s.v_plus >= s.v_minus - 1e-12)


def test_t3_reaches_argmax(paper_solution):
    d = paper_solution.derived_constants
    C = paper_solution.shock("C")
    assert C.states(d["t3"])[1] == pytest.approx(d["argmax_z"], abs=1e-6)
    assert d["t1"] < d["t3"] < paper_solution.t_end


def test_rh_residual_small(paper_solution):
    assert rh_residual(paper_solution) <= 1e-4


def test_corrupted_curve_detected(paper_solution):
    C = paper_solution.shock("C")
    bad = dataclasses.replace(C, speed=C.speed * 1.1)
    r = rh_residual([bad])
    assert r == pytest.approx(0.1 * np.max(np.abs(C.speed)), rel=0.05)


def test_single_riemann_shock_residual():
    sol = build_single_shock_solution(quadratic_flux(), riemann_profile(1.0, 0.0), 1.0)
    assert len(sol.shocks) == 1
    assert rh_residual(sol) <= 1e-10
    assert float(sol.shocks[0].position(1.0)) == pytest.approx(0.5, abs=1e-9)


def test_eval_solution_examples(paper_solution):
    t0 = 4 / 11
    assert eval_solution(paper_solution, 0.1, 0.0) == 0.0
    left = eval_solution(paper_solution, t0 + 1e-6, -15 / 22 - 1e-4)
    right = eval_solution(paper_solution, t0 + 1e-6, -15 / 22 + 1e-4)
    assert left == pytest.approx(-1.5, abs=1e-6)
    assert right == pytest.approx(-0.5, abs=1e-3)
    for t in (0.05, 0.15, 1.0, 5.0, 20.0, 100.0):
        v = eval_solution(paper_solution, t, np.linspace(-5, 40, 301))
        assert np.all(v >= -1.5 - 1e-12) and np.all(v <= 1.5 + 1e-12)


def test_hj_function_slope(paper_solution):
    f = hj_function(paper_solution, -10.0)
    t = 3.0
    x = np.linspace(-8, 8, 1601)
    fx = np.gradient(f(t, x), x)
    v = eval_solution(paper_solution, t, x)
    good = np.ones_like(x, dtype=bool)
    for s in paper_solution.alive_shocks(t):
        good &= np.abs(x - float(s.position(t))) > 0.05
    assert np.max(np.abs(fx + v)[good][1:-1]) <= 1e-3
    # far-left anchor moves at rate H(-3/2) = -1/8
    assert f(t, np.array([-10.0]))[0] == pytest.approx(-t / 8, abs=1e-12)


def test_bad_arguments():
    from hjselect.front_tracking import build_counterexample

    with pytest.raises(ConfigError):
        build_counterexample(dt=1e-2)
    with pytest.raises(ConfigError):
        build_counterexample(mode="other")


def test_detect_mode_launch():
    from hjselect.front_tracking import build_counterexample

    sol = build_counterexample(dt=1e-3, mode="detect", t_end=0.3)
    assert sol.shock("A").t[0] == pytest.approx(2 / 13, abs=1e-9)
    assert math.isclose(sol.derived_constants["t_c"], 2 / 13, abs_tol=1e-9)


def test_feet_ordered_right_after_birth(detect_solution_short):
    sol = detect_solution_short
    A = sol.shock("A")
    t = 0.15413533834586465
    z = float(A.position(t))
    xm, xp = _feet_at(sol.cmap, A, t, z)
    assert xm < xp
    assert eval_solution(sol, t, z + 5e-7) == pytest.approx(A.states(t)[1], abs=1e-3)
    assert eval_solution(sol, t, z - 5e-7) == pytest.approx(-1.5, abs=1e-9)
