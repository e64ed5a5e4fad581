"""Generalized play operator with a clamped memory value."""
from __future__ import annotations

import copy
from typing import Iterable, List, Optional

from .curves import PiecewiseLinearCurve


class OperatorStateError(RuntimeError):
    """Raised when an operator is driven before it has been initialized."""


class CurveOrderError(ValueError):
    pass


def check_curve_order(gamma_l: PiecewiseLinearCurve, gamma_r: PiecewiseLinearCurve,
                      rtol: float = 1e-12) -> None:
    """Raise unless gamma_r(x) <= gamma_l(x) for every real x.

    Both curves are linear between consecutive points of the union of their
    breakpoints, so checking those points plus the extension slopes suffices.
    Differences at rounding level (``rtol``) are tolerated.
    """
    def above(a, b):
        return a - b > rtol * max(1.0, abs(a), abs(b))

    knots = sorted(set(gamma_l.xs) | set(gamma_r.xs))
    for x in knots:
        if above(gamma_r.eval(x), gamma_l.eval(x)):
            raise CurveOrderError(f"gamma_r exceeds gamma_l at x={x}")
    if above(gamma_r.right_slope, gamma_l.right_slope):
        raise CurveOrderError("gamma_r overtakes gamma_l to the right")
    if above(gamma_l.left_slope, gamma_r.left_slope):
        raise CurveOrderError("gamma_r overtakes gamma_l to the left")


def clamp_memory(gamma_l, gamma_r, u: float, w: float) -> float:
    return min(gamma_l.eval(u), max(gamma_r.eval(u), w))


class GeneralizedPlay:
    """Stateful play with boundary curves ``gamma_r <= gamma_l``.

    ``update(u)`` clamps the stored memory into ``[gamma_r(u), gamma_l(u)]``.
    This is exact when the input is monotone between consecutive calls.
    """

    def __init__(self, gamma_l: PiecewiseLinearCurve, gamma_r: PiecewiseLinearCurve):
        check_curve_order(gamma_l, gamma_r)
        self.gamma_l = gamma_l
        self.gamma_r = gamma_r
        self.w: Optional[float] = None

    @property
    def initialized(self) -> bool:
        return self.w is not None

    def init(self, u0: float, w0: float) -> float:
        self.w = clamp_memory(self.gamma_l, self.gamma_r, u0, w0)
        return self.w

    def virgin_memory(self, u0: float) -> float:
        """Memory obtained by clamping zero into the band at ``u0``."""
        return clamp_memory(self.gamma_l, self.gamma_r, u0, 0.0)

    def update(self, u: float) -> float:
        if self.w is None:
            raise OperatorStateError("play operator used before init()")
        self.w = min(self.gamma_l.eval(u), max(self.gamma_r.eval(u), self.w))
        return self.w

    def process(self, inputs: Iterable[float]) -> List[float]:
        if self.w is None:
            raise OperatorStateError("play operator used before init()")
        gl, gr = self.gamma_l.eval, self.gamma_r.eval
        w = self.w
        out = []
        for u in inputs:
            w = min(gl(u), max(gr(u), w))
            out.append(w)
        self.w = w
        return out

    def replay(self, inputs: Iterable[float]) -> List[float]:
        """Like :meth:`process` but leaves this instance untouched."""
        return self.clone().process(inputs)

    def clone(self) -> "GeneralizedPlay":
        # curves are immutable and shared
        return copy.copy(self)

    def __repr__(self):
        return f"GeneralizedPlay(w={self.w!r})"


def init(gamma_l, gamma_r, u0: float, w0: float) -> GeneralizedPlay:
    play = GeneralizedPlay(gamma_l, gamma_r)
    play.init(u0, w0)
    return play


def update(state: GeneralizedPlay, u: float) -> float:
    return state.update(u)


def process(state: GeneralizedPlay, inputs: Iterable[float]) -> List[float]:
    return state.process(inputs)
