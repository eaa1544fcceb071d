"""Oleinik chord tests and entropy-violation certificates for tracked shocks.

For a shock joining v_- (left) to v_+ (right) with speed s, admissibility
requires, for every k strictly between the two states,

    (H(v+) - H(k)) / (v+ - k)  <=  s  <=  (H(k) - H(v-)) / (k - v-).

The same two inequalities apply to upward and downward jumps.  Because s is
a weighted mean of the two outer slopes, they fail or hold together.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateJump, NoViolationFound
from .flux import PiecewiseCubicFlux, paper_argmax


@dataclass(frozen=True)
class ChordCheck:
    k: float
    lhs: float
    mid: float
    rhs: float
    ok: bool

    def __iter__(self):
        return iter((self.k, self.lhs, self.mid, self.rhs, self.ok))


def chord_slopes(flux: PiecewiseCubicFlux, v_minus, v_plus, k):
    """(lhs, mid, rhs) slopes; broadcasts over arrays of states and k."""
    v_minus = np.asarray(v_minus, dtype=float)
    v_plus = np.asarray(v_plus, dtype=float)
    k = np.asarray(k, dtype=float)
    h_m, h_p, h_k = flux(v_minus), flux(v_plus), flux(k)
    lhs = (h_p - h_k) / (v_plus - k)
    mid = (h_p - h_m) / (v_plus - v_minus)
    rhs = (h_k - h_m) / (k - v_minus)
    return lhs, mid, rhs


def oleinik_chord_check(
    flux: PiecewiseCubicFlux,
    v_minus: float,
    v_plus: float,
    n_k: int = 200,
    k_values=None,
    tol: float = 1e-12,
) -> list[ChordCheck]:
    """Evaluate the chord inequalities at n_k equispaced interior states.

    Extra states (for instance a particular witness) can be supplied through
    ``k_values``; they are checked in addition to the grid.
    """
    if n_k < 100:
        raise ValueError("n_k must be at least 100")
    if abs(v_plus - v_minus) < 1e-12:
        raise DegenerateJump("chord test needs distinct states")
    w = np.arange(1, n_k + 1) / (n_k + 1)
    ks = v_minus + (v_plus - v_minus) * w
    if k_values is not None:
        lo, hi = min(v_minus, v_plus), max(v_minus, v_plus)
        extra = [float(k) for k in np.atleast_1d(k_values) if lo < k < hi]
        ks = np.unique(np.concatenate([ks, extra]))
    lhs, mid, rhs = chord_slopes(flux, v_minus, v_plus, ks)
    return [
        ChordCheck(float(k), float(a), float(mid), float(b), bool(a <= mid + tol and mid <= b + tol))
        for k, a, b in zip(ks, lhs, rhs)
    ]


@dataclass(frozen=True)
class EntropyViolationCertificate:
    """One violated chord inequality on a tracked shock.

    ``time``/``v_plus``/``witness_k`` give the reference witness: the instant
    the right state passes the maximizer of H on [1/2, 3/2], tested at k = 0.
    The ``onset_*`` fields record the earliest sampled violation found by
    scanning all shocks over a grid of k.
    """

    time: float
    shock_label: str
    v_minus: float
    v_plus: float
    witness_k: float
    lhs_slope: float
    mid_slope: float
    rhs_slope: float
    violated_side: str
    margin: float
    onset_time: float
    onset_shock_label: str
    onset_v_minus: float
    onset_v_plus: float
    onset_k: float
    onset_margin: float
    right_margin: float = field(default=math.nan)

    def recompute(self, flux: PiecewiseCubicFlux) -> tuple[float, float, float]:
        lhs, mid, rhs = chord_slopes(flux, self.v_minus, self.v_plus, self.witness_k)
        return float(lhs), float(mid), float(rhs)

    def to_dict(self) -> dict:
        return asdict(self)


def _violation(flux, vm, vp, ks):
    lhs, mid, rhs = chord_slopes(flux, vm[:, None], vp[:, None], ks)
    return np.maximum(lhs - mid, mid - rhs)


def _scan_shock(flux, curve, stride, n_k, tol):
    """Earliest violated sample on one curve, as (index, k, margin) or None."""
    vm, vp = curve.v_minus, curve.v_plus
    usable = np.abs(vp - vm) >= 1e-9
    w = np.arange(1, n_k + 1) / (n_k + 1)

    def viol_at(idx):
        ks = vm[idx, None] + (vp - vm)[idx, None] * w
        with np.errstate(invalid="ignore", divide="ignore"):
            v = _violation(flux, vm[idx], vp[idx], ks)
        return ks, v

    coarse = np.arange(0, len(vm), stride)
    coarse = coarse[usable[coarse]]
    if coarse.size == 0:
        return None
    _, v = viol_at(coarse)
    bad = np.nonzero(np.nanmax(v, axis=1) > tol)[0]
    if bad.size == 0:
        return None
    j = int(bad[0])
    lo = int(coarse[j - 1]) if j > 0 else 0
    fine = np.arange(lo, int(coarse[j]) + 1)
    fine = fine[usable[fine]]
    ks, v = viol_at(fine)
    worst = np.nanmax(v, axis=1)
    i = int(np.nonzero(worst > tol)[0][0])
    m = int(np.nanargmax(v[i]))
    return int(fine[i]), float(ks[i, m]), float(v[i, m])


def entropy_certificate(
    sol,
    dt_scan: float = 1e-2,
    n_k: int = 200,
    witness_k: float = 0.0,
    tol: float = 1e-12,
) -> EntropyViolationCertificate:
    """Scan every shock of ``sol`` for chord violations and build a certificate.

    Raises :class:`NoViolationFound` when all sampled chords hold.  When the
    right state of a shock never reaches the maximizer of H on [1/2, 3/2] the
    witness fields fall back to the onset violation.
    """
    flux = sol.flux
    onset = None
    for curve in sol.shocks:
        if len(curve.t) < 2:
            continue
        dt_curve = float(np.median(np.diff(curve.t)))
        stride = max(1, int(round(dt_scan / dt_curve)))
        hit = _scan_shock(flux, curve, stride, n_k, tol)
        if hit is None:
            continue
        i, k, margin = hit
        key = (float(curve.t[i]), -margin)
        if onset is None or key < onset[0]:
            onset = (key, curve, i, k, margin)
    if onset is None:
        raise NoViolationFound("every sampled chord inequality holds on every shock")
    _, o_curve, o_i, o_k, o_margin = onset
    onset_fields = dict(
        onset_time=float(o_curve.t[o_i]), onset_shock_label=o_curve.label,
        onset_v_minus=float(o_curve.v_minus[o_i]), onset_v_plus=float(o_curve.v_plus[o_i]),
        onset_k=o_k, onset_margin=o_margin,
    )

    witness = _witness_sample(sol, flux)
    if witness is None:
        t, label = onset_fields["onset_time"], o_curve.label
        vm, vp, k = onset_fields["onset_v_minus"], onset_fields["onset_v_plus"], o_k
    else:
        t, label, vm, vp = witness
        k = witness_k
    lhs, mid, rhs = (float(x) for x in chord_slopes(flux, vm, vp, k))
    left, right = lhs - mid, mid - rhs
    side = "left" if left >= right else "right"
    return EntropyViolationCertificate(
        time=t, shock_label=label, v_minus=vm, v_plus=vp, witness_k=k,
        lhs_slope=lhs, mid_slope=mid, rhs_slope=rhs, violated_side=side,
        margin=max(left, right), right_margin=right, **onset_fields,
    )


def _witness_sample(sol, flux):
    """State of the first shock whose right state falls through argmax H on [1/2, 3/2]."""
    z_star = paper_argmax(flux)
    for curve in sol.shocks:
        vp = curve.v_plus
        hit = np.nonzero((vp[1:] <= z_star) & (vp[:-1] > z_star))[0]
        if hit.size == 0:
            continue
        i = int(hit[0])
        w = (vp[i] - z_star) / (vp[i] - vp[i + 1])
        t = float(curve.t[i] + w * (curve.t[i + 1] - curve.t[i]))
        vm = float(curve.v_minus[i] + w * (curve.v_minus[i + 1] - curve.v_minus[i]))
        return t, curve.label, vm, float(z_star)
    return None
