"""Forward-Euler integration of ``(1/K) du/dt + H(u) = r(t)``."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernel
from .kp_model import VIRGIN, KPModel
from .signals import SignalSpec

MAX_ROWS = 1_000_000
DIVERGENCE_FACTOR = 1e6
TRACE_COLUMNS = ("t", "r", "u", "w", "e")


class NumericalDivergenceError(ArithmeticError):
    def __init__(self, step: int, value: float):
        super().__init__(f"integration diverged at step {step} (u={value!r})")
        self.step = step
        self.value = value


class NonConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"Poincare iteration did not converge after {iterations} "
                         f"periods (last residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


@dataclass
class SimConfig:
    model: KPModel
    signal: SignalSpec
    K: float = 10.0
    dt: float = 1e-6
    t_end: float = 1.0
    u0: float = 0.0
    w0: Union[str, Sequence[float]] = VIRGIN
    record_stride: Optional[int] = None

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError(f"gain K must be positive, got {self.K}")
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.record_stride is not None and int(self.record_stride) < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def stride_for(self, n_steps: int) -> int:
        if self.record_stride is not None:
            return int(self.record_stride)
        return max(1, math.ceil((n_steps + 1) / MAX_ROWS))

    def replace(self, **changes) -> "SimConfig":
        return replace(self, **changes)


@dataclass
class Trace:
    t: np.ndarray
    r: np.ndarray
    u: np.ndarray
    w: np.ndarray
    e: np.ndarray
    config: Optional[SimConfig] = None
    meta: dict = field(default_factory=dict)
    final_u: Optional[float] = None
    final_memories: Optional[List[float]] = None

    def __len__(self):
        return len(self.t)

    @classmethod
    def empty(cls) -> "Trace":
        z = np.zeros(0)
        return cls(z, z.copy(), z.copy(), z.copy(), z.copy())

    def column(self, name: str) -> np.ndarray:
        if name not in TRACE_COLUMNS:
            raise KeyError(name)
        return getattr(self, name)

    def window(self, t_lo: float, t_hi: float) -> "Trace":
        m = (self.t >= t_lo) & (self.t <= t_hi)
        return Trace(self.t[m], self.r[m], self.u[m], self.w[m], self.e[m], self.config,
                     dict(self.meta))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_trace_csv(self, fh)

    @classmethod
    def from_csv(cls, path) -> "Trace":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if tuple(rows[0]) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {rows[0]}")
        data = np.array([[float(v) for v in row] for row in rows[1:]]).reshape(-1, 5)
        return cls(*(data[:, i].copy() for i in range(5)))


def write_trace_csv(trace: Trace, fh) -> None:
    fh.write(",".join(TRACE_COLUMNS) + "\n")
    for row in zip(trace.t, trace.r, trace.u, trace.w, trace.e):
        fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _u_limit(model: KPModel, u0: float) -> float:
    return DIVERGENCE_FACTOR * max(model.breakpoint_scale(), abs(u0))


def _integrate(model: KPModel, signal: SignalSpec, K: float, dt: float, n_steps: int,
               u0: float, mem: np.ndarray, stride: int, t0: float = 0.0,
               record: bool = True):
    """Run the compiled loop; ``mem`` is advanced in place."""
    xs, ys, npts, lsl, rsl, weights = model.pack()
    code, p, tab_t, tab_r = signal.kernel_params()
    n_rows = n_steps // stride + 1 if record else 0
    out = _kernel.empty_out(n_rows)
    if not record:
        stride = n_steps + 2  # only row 0 gets written
        out = _kernel.empty_out(1)
    res = _kernel.run(xs, ys, npts, lsl, rsl, weights, model.offset, mem, float(u0),
                      float(t0), float(dt), int(n_steps), float(K), code, p, tab_t, tab_r,
                      int(stride), _u_limit(model, u0), out)
    u_final, status, bad, max_abs_e, min_u, max_u, _ = res
    if status != _kernel.OK:
        raise NumericalDivergenceError(int(bad), float(u_final))
    stats = {"max_abs_e": max_abs_e, "min_u": min_u, "max_u": max_u}
    return u_final, out, stats


def initial_memories(config: SimConfig, u0: Optional[float] = None) -> np.ndarray:
    model = config.model.clone()
    model.h_init(config.u0 if u0 is None else u0, config.w0)
    return np.array(model.memories, dtype=float)


def clamp_memories(model: KPModel, u: float, memories: Sequence[float]) -> np.ndarray:
    m = model.clone()
    m.h_init(u, list(memories))
    return np.array(m.memories, dtype=float)


def simulate(config: SimConfig) -> Trace:
    """Integrate from ``config.u0`` over ``[0, t_end]`` with the compiled loop."""
    n = config.n_steps
    stride = config.stride_for(n)
    mem = initial_memories(config)
    u_final, out, stats = _integrate(config.model, config.signal, config.K, config.dt, n,
                                     config.u0, mem, stride)
    trace = Trace(*(out[i].copy() for i in range(5)), config=config, meta=dict(stats),
                  final_u=float(u_final), final_memories=mem.tolist())
    trace.meta.update(n_steps=n, record_stride=stride)
    return trace


def simulate_reference(config: SimConfig, n_steps: Optional[int] = None) -> Trace:
    """Pure-Python integration through :class:`KPModel`; slow, used as a cross-check."""
    n = config.n_steps if n_steps is None else n_steps
    stride = config.stride_for(n)
    model = config.model.clone()
    model.h_init(config.u0, config.w0)
    rows = []
    u = config.u0
    w = model.output
    for k in range(n + 1):
        t = k * config.dt
        r = config.signal.eval(t)
        e = r - w
        if k % stride == 0:
            rows.append((t, r, u, w, e))
        if k == n:
            break
        u = u + config.dt * config.K * e
        w = model.h_update(u)
    cols = np.array(rows).T if rows else np.zeros((5, 0))
    return Trace(*(c.copy() for c in cols), config=config, final_u=u,
                 final_memories=model.memories)


def period_steps(T: float, dt: float) -> Tuple[int, float]:
    """Whole number of steps per period and the matching (slightly reduced) step."""
    n = max(1, math.ceil(T / dt - 1e-9))
    return n, T / n


def _require_periodic(config: SimConfig) -> float:
    T = config.signal.period()
    if T is None:
        raise ValueError(f"signal {config.signal.kind!r} is not periodic")
    return T


def poincare_map(config: SimConfig, memories: Optional[Sequence[float]], u_start: float,
                 T: Optional[float] = None) -> Tuple[float, List[float]]:
    """Advance (u_start, memories) by one period of the input.

    Memories are first clamped into the band at ``u_start``; ``None`` applies
    the config's initial-memory rule. The signal is evaluated in local time
    ``[0, T]``, which equals absolute time for a T-periodic input.
    """
    period = _require_periodic(config)
    if T is not None and not math.isclose(T, period, rel_tol=1e-12):
        raise ValueError(f"T={T} does not match the signal period {period}")
    n, dt = period_steps(period, config.dt)
    if memories is None:
        mem = initial_memories(config, u_start)
    else:
        mem = clamp_memories(config.model, u_start, memories)
    u_T, _, _ = _integrate(config.model, config.signal, config.K, dt, n, u_start, mem,
                           stride=1, record=False)
    return float(u_T), mem.tolist()


def find_periodic(config: SimConfig, tol: float = 1e-9, max_iter: int = 50,
                  record_periods: int = 1, rows_per_period: Optional[int] = None) -> Trace:
    """Iterate the Poincare map until ``|P(u) - u| < tol`` and record the orbit.

    The returned trace covers ``record_periods`` periods starting from the
    converged state (time measured from the start of that orbit). The step
    count per period is rounded up to a multiple of the record stride so that
    recorded rows line up period to period.
    """
    period = _require_periodic(config)
    n, dt = period_steps(period, config.dt)
    if config.record_stride is not None:
        stride = int(config.record_stride)
    else:
        target = rows_per_period or max(1, MAX_ROWS // record_periods)
        stride = max(1, math.ceil(n / target))
    n, dt = period_steps(period, period / (math.ceil(n / stride) * stride))
    u = config.u0
    mem = initial_memories(config)
    residual = math.inf
    history = []
    for it in range(1, max_iter + 1):
        u_next, _, _ = _integrate(config.model, config.signal, config.K, dt, n, u, mem,
                                  stride=1, record=False)
        residual = abs(u_next - u)
        history.append(residual)
        u = u_next
        if residual < tol:
            break
    else:
        raise NonConvergenceError(residual, max_iter)
    start_mem = mem.tolist()
    u_final, out, stats = _integrate(config.model, config.signal, config.K, dt,
                                     n * record_periods, u, mem, stride)
    trace = Trace(*(out[i].copy() for i in range(5)), config=config, meta=dict(stats),
                  final_u=float(u_final), final_memories=mem.tolist())
    trace.meta.update(residual=residual, iterations=it, periods_discarded=it,
                      residual_history=history, period=period, steps_per_period=n,
                      dt_effective=dt, record_stride=stride, u_start=u,
                      start_memories=start_mem)
    return trace
