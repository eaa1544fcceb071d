"""Piecewise linear initial data."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PiecewiseLinearProfile:
    """Linear interpolation between knots, constant extensions outside.

    The extensions need not match the end values, which allows Riemann data
    (a single knot with different constants on either side).
    """

    knots: tuple
    values: tuple
    left_extension: float
    right_extension: float
    _x: np.ndarray = field(init=False, repr=False, compare=False)
    _v: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = tuple(self.knots)
        values = tuple(self.values)
        if len(knots) != len(values) or not knots:
            raise ValueError("knots and values must be non-empty and of equal length")
        x = np.array([float(k) for k in knots])
        v = np.array([float(c) for c in values])
        if np.any(np.diff(x) <= 0):
            raise ValueError("knots must be strictly increasing")
        if not (np.all(np.isfinite(v)) and math.isfinite(float(self.left_extension))
                and math.isfinite(float(self.right_extension))):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_x", x)
        object.__setattr__(self, "_v", v)

    def __call__(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = np.interp(x_arr, self._x, self._v)
        out = np.where(x_arr < self._x[0], float(self.left_extension), out)
        out = np.where(x_arr > self._x[-1], float(self.right_extension), out)
        return float(out) if out.ndim == 0 else out

    def value(self, x: float) -> float:
        """Scalar fast path of ``__call__``."""
        xs = self._x
        if x < xs[0]:
            return float(self.left_extension)
        if x > xs[-1]:
            return float(self.right_extension)
        i = bisect.bisect_right(xs, x) - 1
        if i >= len(xs) - 1:
            return float(self._v[-1])
        w = (x - xs[i]) / (xs[i + 1] - xs[i])
        return float(self._v[i] + w * (self._v[i + 1] - self._v[i]))

    def pieces(self) -> list[tuple[float, float, float, float]]:
        """(x_lo, x_hi, slope, intercept) for every linear piece, unbounded ends included."""
        xs, vs = self._x, self._v
        out = [(-math.inf, float(xs[0]), 0.0, float(self.left_extension))]
        for i in range(len(xs) - 1):
            slope = (vs[i + 1] - vs[i]) / (xs[i + 1] - xs[i])
            out.append((float(xs[i]), float(xs[i + 1]), float(slope),
                        float(vs[i] - slope * xs[i])))
        out.append((float(xs[-1]), math.inf, 0.0, float(self.right_extension)))
        return out

    @property
    def value_range(self) -> tuple[float, float]:
        allv = list(self._v) + [float(self.left_extension), float(self.right_extension)]
        return float(min(allv)), float(max(allv))

    @property
    def lipschitz(self) -> float:
        if len(self._x) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self._v) / np.diff(self._x))))

    @property
    def is_continuous(self) -> bool:
        return (float(self.left_extension) == self._v[0]
                and float(self.right_extension) == self._v[-1])

    def antiderivative(self, x):
        """Integral of the profile from the first knot to x (negative to the left)."""
        x_arr = np.asarray(x, dtype=float)
        xs, vs = self._x, self._v
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (vs[1:] + vs[:-1]) * np.diff(xs))])
        inside = np.clip(x_arr, xs[0], xs[-1])
        i = np.clip(np.searchsorted(xs, inside, side="right") - 1, 0, max(len(xs) - 2, 0))
        if len(xs) == 1:
            mid = np.zeros_like(inside)
        else:
            slope = (vs[i + 1] - vs[i]) / (xs[i + 1] - xs[i])
            dx = inside - xs[i]
            mid = cum[i] + vs[i] * dx + 0.5 * slope * dx**2
        left = np.minimum(x_arr - xs[0], 0.0) * float(self.left_extension)
        right = np.maximum(x_arr - xs[-1], 0.0) * float(self.right_extension)
        out = mid + left + right
        return float(out) if out.ndim == 0 else out

    def cell_averages(self, edges: np.ndarray) -> np.ndarray:
        """Exact averages over the cells delimited by ``edges``."""
        edges = np.asarray(edges, dtype=float)
        F = self.antiderivative(edges)
        avg = np.diff(F) / np.diff(edges)
        # cells without an interior knot: the midpoint value is exact and avoids cancellation
        n_knots = np.searchsorted(self._x, edges[1:], side="left") - \
            np.searchsorted(self._x, edges[:-1], side="right")
        smooth = n_knots <= 0
        mid = 0.5 * (edges[1:] + edges[:-1])
        avg[smooth] = np.asarray(self(mid[smooth]), dtype=float)
        return avg

    def to_dict(self) -> dict:
        def num(x):
            if isinstance(x, Fraction):
                return str(x) if x.denominator != 1 else int(x)
            return x

        return {
            "knots": [num(k) for k in self.knots],
            "values": [num(v) for v in self.values],
            "left_extension": num(self.left_extension),
            "right_extension": num(self.right_extension),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewiseLinearProfile":
        def parse(x):
            return Fraction(x) if isinstance(x, str) else x

        return cls(
            knots=tuple(parse(k) for k in data["knots"]),
            values=tuple(parse(v) for v in data["values"]),
            left_extension=parse(data["left_extension"]),
            right_extension=parse(data["right_extension"]),
        )


def build_initial_profile(L) -> PiecewiseLinearProfile:
    """The non-entropy counter-example's initial data for plateau length L > 3/2."""
    if not L > 1.5:
        raise ValueError(f"L must exceed 3/2, got {L}")
    F = Fraction
    return PiecewiseLinearProfile(
        knots=(F(-3, 2), F(3, 2), L, L + 1),
        values=(F(-3, 2), F(3, 2), F(3, 2), F(1, 2)),
        left_extension=F(-3, 2),
        right_extension=F(1, 2),
    )


def symmetric_core_profile() -> PiecewiseLinearProfile:
    """Initial data before the asymmetric ramp is felt: clip(x, -3/2, 3/2)."""
    F = Fraction
    return PiecewiseLinearProfile(
        knots=(F(-3, 2), F(3, 2)), values=(F(-3, 2), F(3, 2)),
        left_extension=F(-3, 2), right_extension=F(3, 2),
    )


def riemann_profile(left: float, right: float, at: float = 0.0) -> PiecewiseLinearProfile:
    return PiecewiseLinearProfile(knots=(at,), values=(right,),
                                  left_extension=left, right_extension=right)


def compression_profile(amplitude: float = 1.0, half_width: float = 1.0) -> PiecewiseLinearProfile:
    """Decreasing ramp from +amplitude to -amplitude over [-half_width, half_width]."""
    return PiecewiseLinearProfile(
        knots=(-half_width, half_width), values=(amplitude, -amplitude),
        left_extension=amplitude, right_extension=-amplitude,
    )


def constant_profile(k: float) -> PiecewiseLinearProfile:
    return PiecewiseLinearProfile(knots=(0.0,), values=(k,), left_extension=k, right_extension=k)


def profile_from_points(knots: Sequence[float], values: Sequence[float]) -> PiecewiseLinearProfile:
    return PiecewiseLinearProfile(tuple(knots), tuple(values), values[0], values[-1])
