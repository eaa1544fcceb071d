"""Closed-form characteristic maps for piecewise linear data and piecewise cubic flux.

On every interval where the initial profile is linear, v0(x) = alpha x + beta,
and the flux is a single cubic, the characteristic foot map

    X^t(x) = x + t H'(v0(x)) = t a2 x^2 + (1 + t a1) x + t a0

is a quadratic in x, so X^t(x) = y is inverted exactly.  The local compression
rate c'(x) = d/dx H'(v0(x)) = 2 a2 x + a1 is linear on each piece.
"""

from __future__ import annotations

import bisect
import math

import numpy as np

from .flux import PiecewiseCubicFlux
from .profiles import PiecewiseLinearProfile

# (x_lo, x_hi, alpha, beta, a2, a1, a0)
Piece = tuple


class CharacteristicMap:
    root_tol = 1e-12

    def __init__(self, flux: PiecewiseCubicFlux, profile: PiecewiseLinearProfile):
        self.flux = flux
        self.profile = profile
        self.pieces: list[Piece] = []
        for lo, hi, alpha, beta in profile.pieces():
            cuts = [lo, hi]
            if alpha != 0.0:
                for b in flux._bp_list:
                    xb = (b - beta) / alpha
                    if lo < xb < hi:
                        cuts.append(xb)
            cuts.sort()
            for a, b in zip(cuts[:-1], cuts[1:]):
                if math.isinf(a) and math.isinf(b):
                    mid = 0.0
                elif math.isinf(a):
                    mid = b - 1.0
                elif math.isinf(b):
                    mid = a + 1.0
                else:
                    mid = 0.5 * (a + b)
                c3, c2, c1, _ = flux._coef_list[bisect.bisect_left(flux._bp_list, alpha * mid + beta)]
                a2 = 3.0 * c3 * alpha * alpha
                a1 = 6.0 * c3 * alpha * beta + 2.0 * c2 * alpha
                a0 = 3.0 * c3 * beta * beta + 2.0 * c2 * beta + c1
                self.pieces.append((a, b, alpha, beta, a2, a1, a0))
        self._lo = [p[0] for p in self.pieces]

    # -- forward map --------------------------------------------------------

    def position(self, t, x):
        x = np.asarray(x, dtype=float)
        return x + t * self.flux.evaluate(self.profile(x), 1)

    def piece_index(self, x: float, side: str = "right") -> int:
        """Index of the piece containing x; at a piece boundary ``side`` picks the neighbour."""
        if side == "right":
            i = bisect.bisect_right(self._lo, x) - 1
        else:
            i = bisect.bisect_left(self._lo, x) - 1
        return min(max(i, 0), len(self.pieces) - 1)

    def compression_rate(self, x, side: str = "right"):
        """c'(x) = d/dx H'(v0(x)), one-sided at piece boundaries."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x_arr)
        for k, xv in enumerate(x_arr):
            p = self.pieces[self.piece_index(float(xv), side)]
            out[k] = 2.0 * p[4] * xv + p[5]
        return float(out[0]) if np.ndim(x) == 0 else out

    # -- inversion ----------------------------------------------------------

    def piece_roots(self, i: int, t: float, y: float) -> list[tuple[float, float]]:
        """Roots x of X^t(x) = y on piece i, with the stretch dX/dx at each."""
        lo, hi, _, _, a2, a1, a0 = self.pieces[i]
        A = t * a2
        B = 1.0 + t * a1
        C = t * a0 - y
        if A == 0.0 or abs(A) * (1.0 + abs(y)) < 1e-15 * abs(B):
            if B == 0.0:
                return []
            roots = (-C / B,)
        else:
            disc = B * B - 4.0 * A * C
            if disc < 0.0:
                if disc > -1e-14 * B * B:
                    disc = 0.0
                else:
                    return []
            sq = math.sqrt(disc)
            q = -0.5 * (B + math.copysign(sq, B))
            roots = (q / A, C / q) if q != 0.0 else (0.0,)
        tol = self.root_tol * (1.0 + abs(y))
        out = []
        for x in roots:
            if lo - tol <= x <= hi + tol:
                out.append((x, 2.0 * A * x + B))
        return out

    def all_roots(self, t: float, y: float) -> list[tuple[float, float]]:
        out = []
        for i in range(len(self.pieces)):
            out.extend(self.piece_roots(i, t, y))
        return sorted(out)

    def right_foot(self, t, y, ref, start_piece, stretch_tol=1e-10, back_tol=1e-9):
        """Smallest non-folded root at or beyond ``ref``, searching pieces upward."""
        floor = ref - back_tol * (1.0 + abs(ref))
        for i in range(start_piece, len(self.pieces)):
            if self.pieces[i][1] < floor:
                continue
            best = None
            for x, d in self.piece_roots(i, t, y):
                if d >= -stretch_tol and x >= floor and (best is None or x < best):
                    best = x
            if best is not None:
                return best, i
        return None

    def left_foot(self, t, y, ref, start_piece, stretch_tol=1e-10, back_tol=1e-9):
        """Largest non-folded root at or below ``ref``, searching pieces downward."""
        ceil = ref + back_tol * (1.0 + abs(ref))
        for i in range(start_piece, -1, -1):
            if self.pieces[i][0] > ceil:
                continue
            best = None
            for x, d in self.piece_roots(i, t, y):
                if d >= -stretch_tol and x <= ceil and (best is None or x > best):
                    best = x
            if best is not None:
                return best, i
        return None

    def roots_grid(self, t: float, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """All roots for many targets at once: arrays (n, 2 * n_pieces), NaN-padded."""
        y = np.asarray(y, dtype=float)
        n, m = y.size, len(self.pieces)
        xs = np.full((n, 2 * m), np.nan)
        ds = np.full((n, 2 * m), np.nan)
        for i, (lo, hi, _, _, a2, a1, a0) in enumerate(self.pieces):
            A = t * a2
            B = 1.0 + t * a1
            C = t * a0 - y
            if A == 0.0 or abs(A) < 1e-15 * abs(B):
                if B == 0.0:
                    continue
                r1 = -C / B
                r2 = np.full_like(r1, np.nan)
            else:
                disc = B * B - 4.0 * A * C
                disc = np.where((disc < 0) & (disc > -1e-14 * B * B), 0.0, disc)
                with np.errstate(invalid="ignore", divide="ignore"):
                    sq = np.sqrt(disc)
                    q = -0.5 * (B + np.copysign(sq, B))
                    r1 = q / A
                    r2 = np.where(q != 0.0, C / q, np.nan)
            tol = self.root_tol * (1.0 + np.abs(y))
            for k, r in enumerate((r1, r2)):
                ok = (r >= lo - tol) & (r <= hi + tol)
                xs[:, 2 * i + k] = np.where(ok, r, np.nan)
                ds[:, 2 * i + k] = np.where(ok, 2.0 * A * r + B, np.nan)
        return xs, ds


def characteristic_position(flux: PiecewiseCubicFlux, v0: PiecewiseLinearProfile, t, x):
    """X^t(x) = x + t H'(v0(x))."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be non-negative")
    x = np.asarray(x, dtype=float)
    out = x + t * flux.evaluate(v0(x), 1)
    return float(out) if out.ndim == 0 else out
