from __future__ import annotations

import numpy as np
import pytest

from hjselect.entropy import chord_slopes, entropy_certificate, oleinik_chord_check
from hjselect.errors import NoViolationFound
from hjselect.flux import build_paper_flux, paper_argmax, quadratic_flux
from hjselect.studies import convex_control_solution

Z = (76 + 8 * np.sqrt(34)) / 120


def test_convex_chords_all_hold():
    Q = quadratic_flux()
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = np.sort(rng.uniform(-3, 3, 2))
        # the admissible direction for a convex flux is a downward jump
        assert all(c.ok for c in oleinik_chord_check(Q, b, a))


def test_symmetric_chords():
    lhs, mid, rhs = chord_slopes(build_paper_flux(), -1.5, 1.5, 0.0)
    assert lhs == pytest.approx(-1 / 12, abs=1e-15)
    assert mid == pytest.approx(0.0, abs=1e-15)
    assert rhs == pytest.approx(1 / 12, abs=1e-15)


def test_violation_at_argmax():
    P = build_paper_flux()
    lhs, mid, rhs = chord_slopes(P, -1.5, Z, 0.0)
    # independent oracle from the cubic coefficients
    hz = -5 / 4 * Z**3 + 19 / 8 * Z**2 - 15 / 16 * Z + 5 / 32
    assert lhs == pytest.approx(hz / Z, abs=1e-14)
    assert mid == pytest.approx((hz + 1 / 8) / (Z + 1.5), abs=1e-14)
    assert lhs > mid
    assert lhs - mid == pytest.approx(0.151, abs=0.002)
    checks = oleinik_chord_check(P, -1.5, Z, k_values=[0.0])
    assert not all(c.ok for c in checks)


def test_chord_check_validation():
    with pytest.raises(ValueError):
        oleinik_chord_check(quadratic_flux(), 0.0, 1.0, n_k=10)


def test_certificate_paper(paper_solution):
    cert = entropy_certificate(paper_solution)
    assert cert.witness_k == 0.0
    assert cert.v_minus == pytest.approx(-1.5, abs=1e-9)
    assert cert.v_plus == pytest.approx(paper_argmax(paper_solution.flux), abs=1e-12)
    assert cert.violated_side == "left"
    assert cert.margin == pytest.approx(0.151, abs=0.002)
    assert cert.recompute(paper_solution.flux) == pytest.approx(
        (cert.lhs_slope, cert.mid_slope, cert.rhs_slope), abs=1e-15)
    assert cert.onset_time <= cert.time
    assert cert.onset_margin > 0


def test_convex_control_no_violation():
    with pytest.raises(NoViolationFound):
        entropy_certificate(convex_control_solution(t_end=3.0))
