"""Piecewise-linear, non-decreasing boundary curves."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

CONSTANT = "constant"
LINEAR = "linear"
_EXTENSIONS = (CONSTANT, LINEAR)


class CurveError(ValueError):
    pass


@dataclass(frozen=True)
class PiecewiseLinearCurve:
    """Continuous non-decreasing function given by breakpoints.

    Between breakpoints the curve is interpolated linearly. Outside the
    breakpoint hull it is either held constant or continued with the slope
    of the end segment.
    """

    xs: Tuple[float, ...]
    ys: Tuple[float, ...]
    left_extension: str = CONSTANT
    right_extension: str = CONSTANT
    _slopes: Tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        ys = tuple(float(y) for y in self.ys)
        if len(xs) != len(ys):
            raise CurveError("xs and ys differ in length")
        if len(xs) < 1:
            raise CurveError("a curve needs at least one breakpoint")
        if not all(math.isfinite(v) for v in xs + ys):
            raise CurveError("breakpoints must be finite")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise CurveError("breakpoint x-coordinates must be strictly increasing")
        if any(b < a for a, b in zip(ys, ys[1:])):
            raise CurveError("breakpoint y-coordinates must be non-decreasing")
        for ext in (self.left_extension, self.right_extension):
            if ext not in _EXTENSIONS:
                raise CurveError(f"unknown extension {ext!r}")
        if len(xs) == 1 and LINEAR in (self.left_extension, self.right_extension):
            raise CurveError("a single-point curve only admits constant extensions")
        slopes = tuple((y1 - y0) / (x1 - x0) for x0, x1, y0, y1 in zip(xs, xs[1:], ys, ys[1:]))
        if not all(math.isfinite(s) for s in slopes):
            raise CurveError("breakpoints too close together: segment slope overflows")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "_slopes", slopes)

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]], left: str = CONSTANT,
                    right: str = CONSTANT) -> "PiecewiseLinearCurve":
        pts = [tuple(p) for p in points]
        return cls(tuple(p[0] for p in pts), tuple(p[1] for p in pts), left, right)

    @classmethod
    def identity(cls) -> "PiecewiseLinearCurve":
        return cls((0.0, 1.0), (0.0, 1.0), LINEAR, LINEAR)

    @property
    def points(self):
        return list(zip(self.xs, self.ys))

    @property
    def left_slope(self) -> float:
        """Slope used left of the first breakpoint."""
        return self._slopes[0] if self.left_extension == LINEAR else 0.0

    @property
    def right_slope(self) -> float:
        return self._slopes[-1] if self.right_extension == LINEAR else 0.0

    def __call__(self, x: float) -> float:
        return self.eval(x)

    def eval(self, x: float) -> float:
        xs, ys = self.xs, self.ys
        if x <= xs[0]:
            return ys[0] + self.left_slope * (x - xs[0])
        if x >= xs[-1]:
            return ys[-1] + self.right_slope * (x - xs[-1])
        i = bisect.bisect_right(xs, x) - 1
        return ys[i] + self._slopes[i] * (x - xs[i])

    def eval_array(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.xs, self.ys)
        lo = x < self.xs[0]
        hi = x > self.xs[-1]
        out[lo] = self.ys[0] + self.left_slope * (x[lo] - self.xs[0])
        out[hi] = self.ys[-1] + self.right_slope * (x[hi] - self.xs[-1])
        return out

    def lipschitz_constant(self) -> float:
        slopes = list(self._slopes) + [self.left_slope, self.right_slope]
        return max(abs(s) for s in slopes)

    def range(self) -> Tuple[float, float]:
        """(inf, sup) of the curve; infinite where an extension is linear and sloped."""
        lo = -math.inf if self.left_slope > 0 else self.ys[0]
        hi = math.inf if self.right_slope > 0 else self.ys[-1]
        return lo, hi

    def scaled(self, weight: float, shift: float = 0.0) -> "PiecewiseLinearCurve":
        return PiecewiseLinearCurve(self.xs, tuple(weight * y + shift for y in self.ys),
                                    self.left_extension, self.right_extension)

    def modulus_of_continuity(self, M: float, h: float) -> float:
        """Exact sup |f(y1) - f(y2)| over y1, y2 in [-M, M] with |y1 - y2| <= h."""
        if not (M > 0 and h > 0) or not (math.isfinite(M) and math.isfinite(h)):
            raise ValueError(f"modulus of continuity needs M > 0 and h > 0, got M={M}, h={h}")
        if h >= 2 * M:
            return abs(self.eval(M) - self.eval(-M))
        # g(y) = f(y + h) - f(y) is piecewise linear; its extrema sit at kinks
        anchors = {-M, M - h}
        for x in self.xs:
            for a in (x, x - h):
                if -M <= a <= M - h:
                    anchors.add(a)
        return max(abs(self.eval(a + h) - self.eval(a)) for a in anchors)

    def level_set(self, y: float) -> Optional[Tuple[float, float]]:
        """Closed interval {x : f(x) = y} as (lo, hi), possibly unbounded, or None."""
        lo_r, hi_r = self.range()
        if y < lo_r or y > hi_r:
            return None
        return self._level_lo(y), self._level_hi(y)

    def _level_lo(self, y: float) -> float:
        xs, ys = self.xs, self.ys
        if y < ys[0]:
            return xs[0] + (y - ys[0]) / self.left_slope
        if y == ys[0] and self.left_slope == 0.0:
            return -math.inf
        i = bisect.bisect_left(ys, y)
        if i == len(ys):
            return xs[-1] + (y - ys[-1]) / self.right_slope
        if ys[i] == y:
            return xs[i]
        return xs[i - 1] + (y - ys[i - 1]) / self._slopes[i - 1]

    def _level_hi(self, y: float) -> float:
        xs, ys = self.xs, self.ys
        if y > ys[-1]:
            return xs[-1] + (y - ys[-1]) / self.right_slope
        if y == ys[-1] and self.right_slope == 0.0:
            return math.inf
        i = bisect.bisect_right(ys, y) - 1
        if i < 0:
            return xs[0] + (y - ys[0]) / self.left_slope
        if ys[i] == y:
            return xs[i]
        return xs[i] + (y - ys[i]) / self._slopes[i]

    def preimage_max(self, y: float) -> Optional[float]:
        """Largest x with f(x) = y.

        When the level set runs off into a constant right extension the last
        breakpoint is returned; use :meth:`level_set` to detect that case.
        """
        ls = self.level_set(y)
        if ls is None:
            return None
        return self.xs[-1] if math.isinf(ls[1]) else ls[1]

    def preimage_min(self, y: float) -> Optional[float]:
        ls = self.level_set(y)
        if ls is None:
            return None
        return self.xs[0] if math.isinf(ls[0]) else ls[0]

    def to_dict(self) -> dict:
        return {"points": [[x, y] for x, y in self.points],
                "left": self.left_extension, "right": self.right_extension}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseLinearCurve":
        return cls.from_points(d["points"], d.get("left", CONSTANT), d.get("right", CONSTANT))


# function-style aliases
def eval_curve(curve: PiecewiseLinearCurve, x: float) -> float:
    return curve.eval(x)


def lipschitz_constant(curve: PiecewiseLinearCurve) -> float:
    return curve.lipschitz_constant()


def modulus_of_continuity(curve: PiecewiseLinearCurve, M: float, h: float) -> float:
    return curve.modulus_of_continuity(M, h)


def preimage_max(curve: PiecewiseLinearCurve, y: float) -> Optional[float]:
    return curve.preimage_max(y)


def preimage_min(curve: PiecewiseLinearCurve, y: float) -> Optional[float]:
    return curve.preimage_min(y)


def curve_sum(curves: Sequence[PiecewiseLinearCurve], weights: Sequence[float],
              offset: float = 0.0) -> PiecewiseLinearCurve:
    """offset + sum(w_i * c_i) on the union of breakpoints.

    The result is linear outside the union hull iff any summand with a nonzero
    weight has a sloped extension on that side.
    """
    xs = sorted({x for c in curves for x in c.xs})
    ys = [offset + sum(w * c.eval(x) for c, w in zip(curves, weights)) for x in xs]
    lslope = sum(w * c.left_slope for c, w in zip(curves, weights))
    rslope = sum(w * c.right_slope for c, w in zip(curves, weights))
    if len(xs) == 1:
        # one shared breakpoint: extensions must be constant for a valid curve
        return PiecewiseLinearCurve(xs, ys)
    left = LINEAR if lslope != 0.0 else CONSTANT
    right = LINEAR if rslope != 0.0 else CONSTANT
    # extension slope of a LINEAR curve is its end-segment slope; add a knot
    # outside the hull so the sum's own extension slope is represented exactly
    if left == LINEAR:
        x0 = xs[0] - 1.0
        xs.insert(0, x0)
        ys.insert(0, ys[0] - lslope)
    if right == LINEAR:
        xs.append(xs[-1] + 1.0)
        ys.append(ys[-1] + rslope)
    return PiecewiseLinearCurve(xs, ys, left, right)
