"""KP-type hysteresis: weighted parallel sum of saturated play elements."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .curves import CONSTANT, LINEAR, PiecewiseLinearCurve, curve_sum
from .play import GeneralizedPlay, OperatorStateError

VIRGIN = "virgin"

# (weight, rho, sat_lo, sat_hi); offset 0 gives an output range of [0, 4]
DEFAULT_ELEMENTS = (
    (1.0, 0.25, 0.0, 1.5),
    (1.0, 0.75, 0.0, 1.5),
    (1.0, 1.25, 0.0, 1.0),
)


class UnboundedRangeError(ValueError):
    pass


def _clamp_curve(shift: float, lo: float, hi: float, scale: float) -> PiecewiseLinearCurve:
    # scale * clamp(u + shift, lo, hi)
    lo_inf, hi_inf = math.isinf(lo), math.isinf(hi)
    if lo_inf and hi_inf:
        xs, ys = (-shift, 1.0 - shift), (0.0, scale)
    elif lo_inf:
        xs, ys = (hi - shift - 1.0, hi - shift), (scale * (hi - 1.0), scale * hi)
    elif hi_inf:
        xs, ys = (lo - shift, lo - shift + 1.0), (scale * lo, scale * (lo + 1.0))
    else:
        xs, ys = (lo - shift, hi - shift), (scale * lo, scale * hi)
    return PiecewiseLinearCurve(xs, ys,
                                LINEAR if lo_inf else CONSTANT,
                                LINEAR if hi_inf else CONSTANT)


def make_saturated_play(rho: float, lo: float = -math.inf, hi: float = math.inf,
                        scale: float = 1.0) -> GeneralizedPlay:
    """Play with ``gamma_l = scale*clamp(u+rho, lo, hi)`` and ``gamma_r = scale*clamp(u-rho, lo, hi)``.

    Infinite ``lo``/``hi`` disable saturation on that side.
    """
    if not rho >= 0 or math.isinf(rho):
        raise ValueError(f"half-width rho must be finite and >= 0, got {rho}")
    if not lo < hi:
        raise ValueError(f"saturation needs lo < hi, got [{lo}, {hi}]")
    if not scale > 0 or math.isinf(scale):
        raise ValueError(f"scale must be positive, got {scale}")
    return GeneralizedPlay(_clamp_curve(rho, lo, hi, scale), _clamp_curve(-rho, lo, hi, scale))


@dataclass
class PlayElement:
    weight: float
    play: GeneralizedPlay

    def __post_init__(self):
        if not self.weight >= 0 or math.isinf(self.weight):
            raise ValueError(f"element weights must be finite and nonnegative, got {self.weight}")


class KPModel:
    """Aggregate hysteresis ``offset + sum(a_i * w_i)`` over play elements."""

    def __init__(self, elements: Sequence[PlayElement], offset: float = 0.0,
                 output_floor: float = 0.0):
        if not elements:
            raise ValueError("a KP model needs at least one element")
        self.elements = list(elements)
        self.offset = float(offset)
        self.output_floor = float(output_floor)
        self._w: Optional[float] = None

    @classmethod
    def from_params(cls, params: Sequence[Tuple[float, float, float, float]] = DEFAULT_ELEMENTS,
                    offset: float = 0.0, scale: float = 1.0) -> "KPModel":
        elements = [PlayElement(a, make_saturated_play(rho, lo, hi, scale))
                    for a, rho, lo, hi in params]
        return cls(elements, offset)

    @classmethod
    def default(cls) -> "KPModel":
        return cls.from_params(DEFAULT_ELEMENTS)

    # --- state ---------------------------------------------------------------
    @property
    def initialized(self) -> bool:
        return self._w is not None

    @property
    def memories(self) -> List[float]:
        return [e.play.w for e in self.elements]

    @property
    def output(self) -> float:
        if self._w is None:
            raise OperatorStateError("KP model used before h_init()")
        return self._w

    def _aggregate(self) -> float:
        return self.offset + sum(e.weight * e.play.w for e in self.elements)

    def virgin_memories(self, u0: float) -> List[float]:
        return [e.play.virgin_memory(u0) for e in self.elements]

    def h_init(self, u0: float, w0_elements: Union[str, Sequence[float]] = VIRGIN) -> float:
        if isinstance(w0_elements, str):
            if w0_elements != VIRGIN:
                raise ValueError(f"unknown memory rule {w0_elements!r}")
            w0_elements = self.virgin_memories(u0)
        if len(w0_elements) != len(self.elements):
            raise ValueError(f"expected {len(self.elements)} initial memories, "
                             f"got {len(w0_elements)}")
        for e, w0 in zip(self.elements, w0_elements):
            e.play.init(u0, w0)
        self._w = self._aggregate()
        return self._w

    def h_update(self, u: float) -> float:
        if self._w is None:
            raise OperatorStateError("KP model used before h_init()")
        w = self.offset
        for e in self.elements:
            w += e.weight * e.play.update(u)
        self._w = w
        return w

    def process(self, inputs) -> List[float]:
        return [self.h_update(u) for u in inputs]

    def clone(self) -> "KPModel":
        new = KPModel([PlayElement(e.weight, e.play.clone()) for e in self.elements],
                      self.offset, self.output_floor)
        new._w = self._w
        return new

    # --- static properties ---------------------------------------------------
    def aggregate_envelopes(self) -> Tuple[PiecewiseLinearCurve, PiecewiseLinearCurve]:
        weights = [e.weight for e in self.elements]
        gl = curve_sum([e.play.gamma_l for e in self.elements], weights, self.offset)
        gr = curve_sum([e.play.gamma_r for e in self.elements], weights, self.offset)
        return gl, gr

    def output_range(self) -> Tuple[float, float]:
        lo = hi = self.offset
        for e in self.elements:
            lo_l, hi_l = e.play.gamma_l.range()
            lo_r, hi_r = e.play.gamma_r.range()
            lo_e, hi_e = min(lo_l, lo_r), max(hi_l, hi_r)
            if e.weight > 0 and (math.isinf(lo_e) or math.isinf(hi_e)):
                raise UnboundedRangeError("element curves do not saturate on both sides")
            if e.weight > 0:
                lo += e.weight * lo_e
                hi += e.weight * hi_e
        return lo, hi

    @property
    def output_cap(self) -> float:
        return self.output_range()[1]

    def lipschitz_constant(self) -> float:
        return sum(e.weight * max(e.play.gamma_l.lipschitz_constant(),
                                  e.play.gamma_r.lipschitz_constant())
                   for e in self.elements)

    def breakpoint_scale(self) -> float:
        """Magnitude of the input region where the model's curves bend."""
        return max([1.0] + [abs(x) for e in self.elements
                            for c in (e.play.gamma_l, e.play.gamma_r) for x in c.xs])

    def pack(self):
        """Padded arrays describing all element curves, for the compiled kernel."""
        curves = [c for e in self.elements for c in (e.play.gamma_l, e.play.gamma_r)]
        width = max(len(c.xs) for c in curves)
        n = len(curves)
        xs = np.zeros((n, width))
        ys = np.zeros((n, width))
        npts = np.zeros(n, dtype=np.int64)
        lslope = np.zeros(n)
        rslope = np.zeros(n)
        for i, c in enumerate(curves):
            k = len(c.xs)
            xs[i, :k] = c.xs
            ys[i, :k] = c.ys
            npts[i] = k
            lslope[i] = c.left_slope
            rslope[i] = c.right_slope
        weights = np.array([e.weight for e in self.elements])
        return xs, ys, npts, lslope, rslope, weights

    def to_dict(self) -> dict:
        return {"offset": self.offset,
                "elements": [{"weight": e.weight, "gamma_l": e.play.gamma_l.to_dict(),
                              "gamma_r": e.play.gamma_r.to_dict()} for e in self.elements]}

    def __repr__(self):
        return f"KPModel(n_elements={len(self.elements)}, offset={self.offset})"


def h_init(model: KPModel, u0: float, w0_elements) -> float:
    return model.h_init(u0, w0_elements)


def h_update(model: KPModel, u: float) -> float:
    return model.h_update(u)


def aggregate_envelopes(model: KPModel):
    return model.aggregate_envelopes()


def output_range(model: KPModel):
    return model.output_range()
