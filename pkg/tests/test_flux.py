from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjselect.errors import NonConcaveObjective
from hjselect.flux import (
    PiecewiseCubicFlux,
    convexity_report,
    eval_flux,
    golden_section_max,
    legendre_conjugate,
    paper_argmax,
    tangent_gap,
    theta_slice,
    theta_slice_analysis,
)

Z_EXACT = (76 + 8 * math.sqrt(34)) / 120


def exact_h(p: Fraction) -> Fraction:
    F = Fraction
    if p <= F(-1, 2):
        c = (F(5, 4), F(19, 8), F(15, 16), F(5, 32))
    elif p <= F(1, 2):
        c = (F(0), F(1, 2), F(0), F(0))
    else:
        c = (F(-5, 4), F(19, 8), F(-15, 16), F(5, 32))
    return ((c[0] * p + c[1]) * p + c[2]) * p + c[3]


def test_paper_flux_structure(paper_flux):
    assert [float(b) for b in paper_flux.breakpoints] == [-0.5, 0.5]
    assert paper_flux.segments[0] == (Fraction(5, 4), Fraction(19, 8), Fraction(15, 16), Fraction(5, 32))
    assert paper_flux.segments[1] == (0, Fraction(1, 2), 0, 0)


def test_c2_matching_at_breakpoints(paper_flux):
    assert np.max(paper_flux.breakpoint_gaps()) <= 1e-12


def test_evenness(paper_flux):
    p = np.linspace(-3, 3, 10_000)
    assert np.max(np.abs(paper_flux(p) - paper_flux(-p))) <= 1e-12


def test_exact_values(paper_flux):
    assert paper_flux(0.0) == 0.0
    assert paper_flux(-1.5) == pytest.approx(-1 / 8, abs=1e-15)
    assert paper_flux(1.5) == pytest.approx(-1 / 8, abs=1e-15)
    assert exact_h(Fraction(3, 2)) == Fraction(-1, 8)
    for order, want in ((0, 1 / 8), (1, 1 / 2), (2, 1.0)):
        assert eval_flux(paper_flux, 0.5, order) == pytest.approx(want, abs=1e-14)
        # right segment evaluated at the breakpoint from its own polynomial
        c = np.array([float(x) for x in paper_flux.segments[2]])
        poly = np.polynomial.Polynomial(c[::-1])
        assert poly.deriv(order)(0.5) == pytest.approx(want, abs=1e-14)


def test_derivative_examples(paper_flux, quad_flux):
    assert eval_flux(paper_flux, -1.5, 1) == pytest.approx(9 / 4, abs=1e-14)
    assert eval_flux(paper_flux, 1.5, 1) == pytest.approx(-9 / 4, abs=1e-14)
    assert eval_flux(quad_flux, 3.0, 2) == 1.0


def test_bad_order(paper_flux):
    with pytest.raises(ValueError):
        paper_flux.evaluate(0.0, 3)


def test_construction_validation():
    with pytest.raises(ValueError):
        PiecewiseCubicFlux(breakpoints=(0.0,), segments=((0, 1, 0, 0),))
    with pytest.raises(ValueError):
        PiecewiseCubicFlux(breakpoints=(1.0, 0.0), segments=((0, 0, 0, 0),) * 3)


def test_json_round_trip(paper_flux):
    back = PiecewiseCubicFlux.from_json(paper_flux.to_json())
    p = np.linspace(-2, 2, 101)
    assert np.array_equal(back(p), paper_flux(p))


def test_scalar_fast_paths_agree(paper_flux):
    for p in np.linspace(-2, 2, 41):
        assert paper_flux.h(p) == pytest.approx(paper_flux(p), abs=1e-15)
        assert paper_flux.dh(p) == pytest.approx(paper_flux(p, 1), abs=1e-15)
        assert paper_flux.d2h(p) == pytest.approx(paper_flux(p, 2), abs=1e-15)


def test_legendre_quadratic(quad_flux):
    assert legendre_conjugate(quad_flux, 3.0, (-10, 10)) == pytest.approx(4.5, abs=1e-10)
    assert legendre_conjugate(quad_flux, 0.0, (-10, 10)) == pytest.approx(0.0, abs=1e-10)


def test_legendre_rejects_concave_patch(paper_flux):
    with pytest.raises(NonConcaveObjective):
        legendre_conjugate(paper_flux, 0.0, (1.0, 1.5))
    # the central parabola is convex, so no complaint there
    legendre_conjugate(paper_flux, 0.1, (-0.5, 0.5))


@settings(max_examples=60, deadline=None)
@given(p=st.floats(-4, 4), q=st.floats(-4, 4))
def test_fenchel_young(quad_flux, p, q):
    hstar = legendre_conjugate(quad_flux, q, (-10, 10))
    assert p * q <= quad_flux(p) + hstar + 1e-9


def test_convexity_report_paper(paper_flux):
    rep = convexity_report(paper_flux, (0.5, 1.5))
    assert rep.argmax_on_interval == pytest.approx(Z_EXACT, abs=1e-10)
    assert rep.max_value == pytest.approx(0.3444, abs=1e-4)
    assert paper_argmax(paper_flux) == pytest.approx(Z_EXACT, abs=1e-10)
    wide = convexity_report(paper_flux, (-2, 2))
    assert not wide.is_convex
    assert wide.inflection_points == pytest.approx([-19 / 30, 19 / 30], abs=1e-12)


def test_convexity_report_quadratic(quad_flux):
    rep = convexity_report(quad_flux, (-1, 1))
    assert rep.is_convex and rep.is_strictly_convex
    assert rep.inflection_points == []


def test_convexity_report_interior_max_is_concave(paper_flux):
    rep = convexity_report(paper_flux, (0.5, 1.5))
    assert paper_flux(rep.argmax_on_interval, 2) <= 0


def test_tangent_gap(paper_flux, quad_flux):
    assert tangent_gap(quad_flux, 1.0, 3.0) == pytest.approx(2.0)
    assert tangent_gap(paper_flux, -1.5, -1.5) == 0.0
    assert tangent_gap(paper_flux, 0.5, 1.5) == pytest.approx(-0.75, abs=1e-14)
    exact = exact_h(Fraction(3, 2)) - (exact_h(Fraction(1, 2)) + Fraction(1, 2))
    assert exact == Fraction(-3, 4)


@settings(max_examples=100, deadline=None)
@given(p=st.floats(-5, 5), q=st.floats(-5, 5))
def test_tangent_gap_nonnegative_for_quadratic(quad_flux, p, q):
    assert tangent_gap(quad_flux, p, q) >= -1e-12


def test_tangent_gap_detects_nonconvexity(paper_flux):
    p = np.linspace(-2, 2, 81)
    gaps = [tangent_gap(paper_flux, a, b) for a in p for b in p]
    assert min(gaps) < -0.1


def test_golden_section():
    x, v = golden_section_max(lambda t: -(t - 0.3) ** 2, -1, 1)
    assert x == pytest.approx(0.3, abs=1e-8)
    assert v == pytest.approx(0.0, abs=1e-14)


def test_theta_slice():
    rep = theta_slice_analysis(1001)
    assert rep.barrier_value == 0.875
    assert rep.local_max_at == pytest.approx(0.5, abs=1e-12)
    a, b = rep.minimizers
    assert abs((a + b) - 1.0) <= 1e-6
    assert a == pytest.approx(0.211, abs=1e-3) and b == pytest.approx(0.789, abs=1e-3)
    assert rep.well_value == pytest.approx(0.8333, abs=1e-3)
    assert rep.well_value < rep.barrier_value
    assert theta_slice(0.3) == pytest.approx(theta_slice(0.7))
    with pytest.raises(ValueError):
        theta_slice_analysis(50)
