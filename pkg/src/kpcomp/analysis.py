"""Turning traces into numbers: bounds, equilibria, rates and sweeps."""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .kp_model import KPModel
from .signals import Sinusoid
from .simulator import NonConvergenceError, SimConfig, Trace, find_periodic

LOG_FLOOR = 1e-14
STEADY_REL_TOL = 1e-6
MAX_DISCARDED_PERIODS = 50
SWEEP_ROWS_PER_PERIOD = 100_000


class EstimationError(ValueError):
    pass


class NotSteadyError(RuntimeError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"trace is not yet periodic: residual {residual:.3e} > {tol:.3e}")
        self.residual = residual
        self.tol = tol


def error_bound(R_inf: float, H_max: float) -> float:
    """Trajectory-independent bound ``R_inf + H_max`` on |r - H(u)|."""
    if not 0 < R_inf < H_max:
        raise ValueError(f"bound requires 0 < R_inf < H_max, got R_inf={R_inf}, H_max={H_max}")
    return R_inf + H_max


@dataclass(frozen=True)
class EquilibriumPair:
    """Rest points for a constant input level ``R``.

    ``u1`` is the largest u on the left envelope at level R and ``u2`` the
    smallest on the right envelope. The ``*_unbounded`` flags mark a level set
    that runs into a constant extension, in which case the reported value is
    the last (first) breakpoint.
    """

    R: float
    u1: Optional[float]
    u2: Optional[float]
    u1_unbounded: bool = False
    u2_unbounded: bool = False

    @property
    def degenerate(self) -> bool:
        return self.u1_unbounded or self.u2_unbounded


def equilibria(model: KPModel, R: float) -> EquilibriumPair:
    gl, gr = model.aggregate_envelopes()
    ls_l = gl.level_set(R)
    ls_r = gr.level_set(R)
    u1 = gl.preimage_max(R)
    u2 = gr.preimage_min(R)
    return EquilibriumPair(R, u1, u2,
                           ls_l is not None and math.isinf(ls_l[1]),
                           ls_r is not None and math.isinf(ls_r[0]))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_samples: int


def convergence_fit(trace: Trace, window: Tuple[float, float]) -> RateFit:
    """Least-squares line through ln|e| on ``window``; samples at the floor are dropped."""
    t_lo, t_hi = window
    if len(trace) == 0 or t_lo < trace.t[0] or t_hi > trace.t[-1] or t_lo >= t_hi:
        raise EstimationError(f"window {window} is not inside the trace")
    sel = (trace.t >= t_lo) & (trace.t <= t_hi)
    t = trace.t[sel]
    a = np.abs(trace.e[sel])
    keep = a > LOG_FLOOR
    if keep.sum() < 2:
        raise EstimationError("fewer than two samples above the log floor")
    t, y = t[keep], np.log(a[keep])
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2, int(keep.sum()))


def convergence_rate(trace: Trace, window: Tuple[float, float]) -> float:
    """Exponential decay rate of |e| in 1/s (negative when converging)."""
    return convergence_fit(trace, window).slope


def decay_window(trace: Trace, t_start: float, e_stop: float = 1e-9) -> Tuple[float, float]:
    """From ``t_start`` until |e| first drops below ``e_stop``."""
    idx = np.nonzero((trace.t >= t_start) & (np.abs(trace.e) < e_stop))[0]
    if len(idx) == 0:
        raise EstimationError(f"|e| never falls below {e_stop} after t={t_start}")
    return t_start, float(trace.t[idx[0]])


def _steady_tol(trace: Trace) -> float:
    sig = trace.config.signal if trace.config is not None else None
    if isinstance(sig, Sinusoid):
        return STEADY_REL_TOL * (abs(sig.A0) + abs(sig.A))
    return STEADY_REL_TOL * max(1.0, float(np.max(np.abs(trace.r))) if len(trace) else 1.0)


def periodicity_residual(trace: Trace, T: float, t_from: float) -> float:
    """max |u(t) - u(t - T)| for t >= t_from (u(t - T) interpolated)."""
    sel = trace.t >= t_from - 1e-12 * max(1.0, T)
    shifted = np.interp(trace.t[sel] - T, trace.t, trace.u)
    return float(np.max(np.abs(trace.u[sel] - shifted))) if sel.any() else 0.0


def steady_state_max_error(trace: Trace, T: float, n_periods: int = 1,
                           tol: Optional[float] = None) -> float:
    """max |e| over the last ``n_periods`` periods of a periodic trace."""
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    if len(trace) == 0:
        raise EstimationError("empty trace")
    span = trace.t[-1] - trace.t[0]
    need = (n_periods + 1) * T
    if span < need * (1 - 1e-9):
        raise EstimationError(f"trace spans {span:g} s, need {need:g} s")
    t_from = trace.t[-1] - n_periods * T
    tol = _steady_tol(trace) if tol is None else tol
    residual = periodicity_residual(trace, T, t_from)
    if residual > tol:
        raise NotSteadyError(residual, tol)
    sel = trace.t >= t_from - 1e-12 * max(1.0, T)
    return float(np.max(np.abs(trace.e[sel])))


class Limit(str, enum.Enum):
    U1 = "converged_to_u1"
    U2 = "converged_to_u2"
    BETWEEN = "between"
    NOT_CONVERGED = "not_converged"


def omega_limit_check(trace: Trace, eq: EquilibriumPair, tol: float,
                      tail_fraction: float = 0.1) -> Limit:
    """Classify where the tail of ``u`` settled relative to ``[u1, u2]``."""
    n = len(trace)
    if n == 0 or eq.u1 is None or eq.u2 is None:
        return Limit.NOT_CONVERGED
    tail = trace.u[max(0, n - max(2, int(n * tail_fraction))):]
    if np.ptp(tail) > tol:
        return Limit.NOT_CONVERGED
    m = float(np.mean(tail))
    if abs(m - eq.u2) <= tol:
        return Limit.U2
    if abs(m - eq.u1) <= tol:
        return Limit.U1
    if eq.u1 - tol <= m <= eq.u2 + tol:
        return Limit.BETWEEN
    return Limit.NOT_CONVERGED


SWEEP_HEADER = ("omega_rad_s", "freq_label_hz", "K", "max_abs_e", "periods_discarded")


@dataclass
class SweepRow:
    omega: float
    K: float
    max_abs_e_steady: float
    periods_discarded: int
    status: str = "ok"

    @property
    def freq_label_hz(self) -> float:
        return 2 * math.pi * self.omega


@dataclass
class SweepTable:
    rows: List[SweepRow] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def for_gain(self, K: float) -> List[SweepRow]:
        return [r for r in self.rows if r.K == K]

    def gains(self) -> List[float]:
        return sorted({r.K for r in self.rows})

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_sweep_csv(self, fh)


def write_sweep_csv(table: SweepTable, fh) -> None:
    fh.write(",".join(SWEEP_HEADER) + "\n")
    for r in table.rows:
        vals = (r.omega, r.freq_label_hz, r.K, r.max_abs_e_steady, r.periods_discarded)
        fh.write(",".join(repr(float(v)) if not isinstance(v, int) else str(v) for v in vals)
                 + "\n")


def _sweep_cell(base: SimConfig, omega: float, K: float, max_periods: int) -> SweepRow:
    sig = base.signal
    signal = Sinusoid(sig.A0, sig.A, omega, sig.phi)
    # the base stride is sized for one frequency; let each cell pick its own
    config = base.replace(signal=signal, K=K, record_stride=None)
    tol = STEADY_REL_TOL * (abs(sig.A0) + abs(sig.A))
    try:
        trace = find_periodic(config, tol=tol, max_iter=max_periods, record_periods=2,
                              rows_per_period=SWEEP_ROWS_PER_PERIOD)
        err = steady_state_max_error(trace, signal.period(), 1, tol=tol)
    except (NonConvergenceError, NotSteadyError) as exc:
        return SweepRow(omega, K, math.nan, -1, f"failed: {exc}")
    return SweepRow(omega, K, err, int(trace.meta["periods_discarded"]))


def frequency_sweep(base: SimConfig, omegas: Sequence[float], Ks: Sequence[float],
                    max_periods: int = MAX_DISCARDED_PERIODS,
                    workers: Optional[int] = None) -> SweepTable:
    """Steady-state max |e| for every (omega, K); failing cells are kept with NaN."""
    if not isinstance(base.signal, Sinusoid):
        raise ValueError("frequency sweep needs a sinusoid base signal")
    cells = sorted((float(w), float(k)) for w in omegas for k in Ks)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda c: _sweep_cell(base, c[0], c[1], max_periods), cells))
    return SweepTable(rows)
