"""Reference inputs r(t)."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import ClassVar, Dict, Sequence, Tuple, Type

import numpy as np

# integer tags understood by the compiled kernel
STEP, HILLGAUSS, SINUSOID, TABLE = 0, 1, 2, 3


def _check_time(t):
    if np.any(np.asarray(t) < 0):
        raise ValueError("signals are defined for t >= 0 only")


class SignalSpec:
    kind: ClassVar[str]
    code: ClassVar[int]

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        _check_time(t)
        out = self._eval(np.asarray(t, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def _eval(self, t: np.ndarray):
        raise NotImplementedError

    def lipschitz_bound(self, horizon: float) -> float:
        raise NotImplementedError

    def period(self):
        return None

    def kernel_params(self) -> Tuple[int, np.ndarray, np.ndarray, np.ndarray]:
        return self.code, np.asarray(self._param_vector(), dtype=float), np.zeros(1), np.zeros(1)

    def _param_vector(self):
        return []

    def to_dict(self) -> dict:
        return {"kind": self.kind, **asdict(self)}


@dataclass(frozen=True)
class Step(SignalSpec):
    """``level_before`` for t < t_on, ``R`` afterwards. Not Lipschitz."""

    t_on: float = 0.1
    R: float = 2.0
    level_before: float = 0.0
    kind: ClassVar[str] = "step"
    code: ClassVar[int] = STEP

    def _eval(self, t):
        return np.where(t < self.t_on, self.level_before, self.R)

    def lipschitz_bound(self, horizon: float) -> float:
        if self.R == self.level_before or horizon < self.t_on:
            return 0.0
        return math.inf

    def _param_vector(self):
        return [self.t_on, self.R, self.level_before]


@dataclass(frozen=True)
class HillGauss(SignalSpec):
    """Hill ramp towards ``a1`` plus a Gaussian-windowed sine burst."""

    a1: float = 2.0
    n: float = 4.0
    h: float = 0.2
    a2: float = 0.1
    sigma: float = 0.1
    mu: float = 0.3
    omega: float = 100.0
    kind: ClassVar[str] = "hillgauss"
    code: ClassVar[int] = HILLGAUSS

    def _eval(self, t):
        tn = t ** self.n
        hill = self.a1 * tn / (self.h ** self.n + tn)
        amp = self.a2 / math.sqrt(2 * math.pi * self.sigma ** 2)
        gauss = amp * np.exp(-(t - self.mu) ** 2 / (2 * self.sigma ** 2))
        return hill + gauss * np.sin(self.omega * t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        hn = self.h ** self.n
        tn = t ** self.n
        dhill = self.a1 * self.n * t ** (self.n - 1) * hn / (hn + tn) ** 2
        amp = self.a2 / math.sqrt(2 * math.pi * self.sigma ** 2)
        g = amp * np.exp(-(t - self.mu) ** 2 / (2 * self.sigma ** 2))
        dg = -g * (t - self.mu) / self.sigma ** 2
        return dhill + dg * np.sin(self.omega * t) + g * self.omega * np.cos(self.omega * t)

    def lipschitz_bound(self, horizon: float, step: float = 1e-5) -> float:
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        grid = np.arange(0.0, horizon + step, step)
        return float(np.max(np.abs(self.derivative(grid))))

    @property
    def R_inf(self) -> float:
        return self.a1

    def _param_vector(self):
        return [self.a1, self.n, self.h, self.a2, self.sigma, self.mu, self.omega]


@dataclass(frozen=True)
class Sinusoid(SignalSpec):
    """``A0 + A*sin(omega*t + phi)`` with omega in rad/s."""

    A0: float = 1.1
    A: float = 1.0
    omega: float = 1.0 / (2 * math.pi)
    phi: float = -math.pi / 2
    kind: ClassVar[str] = "sinusoid"
    code: ClassVar[int] = SINUSOID

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("sinusoid frequency must be positive")

    def _eval(self, t):
        return self.A0 + self.A * np.sin(self.omega * t + self.phi)

    def lipschitz_bound(self, horizon: float) -> float:
        return abs(self.A) * self.omega

    def period(self) -> float:
        return 2 * math.pi / self.omega

    @property
    def freq_label_hz(self) -> float:
        # plots label the axis "2*pi*omega" in Hz
        return 2 * math.pi * self.omega

    @property
    def R_inf(self) -> float:
        return self.A0 + abs(self.A)

    def _param_vector(self):
        return [self.A0, self.A, self.omega, self.phi]


@dataclass(frozen=True)
class Table(SignalSpec):
    """Linear interpolation of (t, r) breakpoints, held constant past the ends."""

    points: Tuple[Tuple[float, float], ...] = ((0.0, 0.0), (1.0, 1.0))
    kind: ClassVar[str] = "table"
    code: ClassVar[int] = TABLE

    def __post_init__(self):
        pts = tuple((float(a), float(b)) for a, b in self.points)
        if not pts:
            raise ValueError("table signal needs at least one point")
        if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
            raise ValueError("table times must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def ts(self):
        return np.array([p[0] for p in self.points])

    @property
    def rs(self):
        return np.array([p[1] for p in self.points])

    def _eval(self, t):
        return np.interp(t, self.ts, self.rs)

    def lipschitz_bound(self, horizon: float) -> float:
        ts, rs = self.ts, self.rs
        if len(ts) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(rs) / np.diff(ts))))

    def kernel_params(self):
        return self.code, np.zeros(1), self.ts, self.rs

    def to_dict(self) -> dict:
        return {"kind": self.kind, "points": [list(p) for p in self.points]}


SIGNAL_KINDS: Dict[str, Type[SignalSpec]] = {
    cls.kind: cls for cls in (Step, HillGauss, Sinusoid, Table)
}


def signal_from_dict(d: dict) -> SignalSpec:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in SIGNAL_KINDS:
        raise ValueError(f"unknown signal kind {kind!r}; expected one of {sorted(SIGNAL_KINDS)}")
    cls = SIGNAL_KINDS[kind]
    if cls is Table:
        return Table(tuple(tuple(p) for p in d["points"]))
    try:
        return cls(**{k: float(v) for k, v in d.items()})
    except TypeError as exc:
        raise ValueError(f"bad parameters for {kind} signal: {exc}") from None


def ramped_step(t_on: float, R: float, rise: float, level_before: float = 0.0) -> Table:
    """Lipschitz stand-in for :class:`Step` rising over ``rise`` seconds."""
    pts = [(t_on, level_before), (t_on + rise, R)]
    if t_on > 0:
        pts.insert(0, (0.0, level_before))
    return Table(tuple(pts))


def eval_signal(signal: SignalSpec, t):
    return signal.eval(t)


def lipschitz_bound(signal: SignalSpec, horizon: float) -> float:
    return signal.lipschitz_bound(horizon)
