"""Independent oracles and randomized property campaigns for the play operator.

Nothing here goes through :class:`~kpcomp.play.GeneralizedPlay`; the
recurrence is re-derived directly from the boundary curves so that the
streaming implementation can be checked against it.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernel
from .curves import CONSTANT, LINEAR, PiecewiseLinearCurve
from .play import CurveOrderError, GeneralizedPlay, check_curve_order
from .simulator import SimConfig, initial_memories, period_steps, poincare_map

EXACT_TOL = 1e-12
INTEGRATED_TOL = 1e-10


@dataclass(frozen=True)
class PiecewiseLinearInput:
    """Continuous input, linear between the breakpoints ``(ts[i], us[i])``."""

    ts: Tuple[float, ...]
    us: Tuple[float, ...]

    def __post_init__(self):
        ts = tuple(float(t) for t in self.ts)
        us = tuple(float(u) for u in self.us)
        if len(ts) != len(us) or not ts:
            raise ValueError("input needs matching, non-empty ts and us")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("input times must be strictly increasing")
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "us", us)

    def __len__(self):
        return len(self.ts)

    def eval(self, t):
        return np.interp(t, self.ts, self.us)

    def max_abs(self) -> float:
        return max(abs(u) for u in self.us)


def _clamp(gamma_l, gamma_r, u, w):
    return min(gamma_l.eval(u), max(gamma_r.eval(u), w))


def oracle_play(inp: PiecewiseLinearInput, gamma_l: PiecewiseLinearCurve,
                gamma_r: PiecewiseLinearCurve, w0: float, refinement: int = 1) -> np.ndarray:
    """Play output at the input breakpoints, computed on a refined partition."""
    if refinement < 1:
        raise ValueError("refinement must be >= 1")
    us = inp.us
    w = _clamp(gamma_l, gamma_r, us[0], w0)
    out = [w]
    for ua, ub in zip(us, us[1:]):
        for j in range(1, refinement + 1):
            u = ub if j == refinement else ua + (ub - ua) * (j / refinement)
            w = _clamp(gamma_l, gamma_r, u, w)
        out.append(w)
    return np.array(out)


def _segment_kinks(ua, ub, w_prev, gamma_l, gamma_r) -> List[float]:
    """u-values inside (ua, ub) where the output can change slope."""
    lo, hi = min(ua, ub), max(ua, ub)
    cand = set()
    for c in (gamma_l, gamma_r):
        cand.update(x for x in c.xs if lo < x < hi)
        ls = c.level_set(w_prev)
        if ls is not None:
            cand.update(x for x in ls if lo < x < hi)
    return sorted(cand)


def kink_times(inp: PiecewiseLinearInput, gamma_l, gamma_r, w0: float) -> np.ndarray:
    """Times between which the play output is linear in t."""
    ts, us = inp.ts, inp.us
    w = _clamp(gamma_l, gamma_r, us[0], w0)
    times = [ts[0]]
    for ta, tb, ua, ub in zip(ts, ts[1:], us, us[1:]):
        if ua != ub:
            for x in _segment_kinks(ua, ub, w, gamma_l, gamma_r):
                times.append(ta + (x - ua) / (ub - ua) * (tb - ta))
        w = _clamp(gamma_l, gamma_r, ub, w)
        times.append(tb)
    return np.array(sorted(set(times)))


def play_values_at(inp: PiecewiseLinearInput, gamma_l, gamma_r, w0: float,
                   times: Iterable[float]) -> np.ndarray:
    """Exact play output at arbitrary times inside the input's time hull.

    Evaluation points are merged with the breakpoints; the recurrence is
    exact between consecutive merged points because the input is monotone
    there.
    """
    times = np.asarray(sorted(times), dtype=float)
    nodes = np.union1d(np.asarray(inp.ts), times)
    vals = inp.eval(nodes)
    w = _clamp(gamma_l, gamma_r, vals[0], w0)
    out = {nodes[0]: w}
    for t, u in zip(nodes[1:], vals[1:]):
        w = _clamp(gamma_l, gamma_r, u, w)
        out[t] = w
    return np.array([out[t] for t in times])


def _modulus_pair(gamma_l, gamma_r, M: float, h: float) -> float:
    if h <= 0 or M <= 0:
        return 0.0
    return max(gamma_l.modulus_of_continuity(M, h), gamma_r.modulus_of_continuity(M, h))


@dataclass
class VisintinReport:
    lhs: float
    rhs: float
    initial_gap: float
    input_gap: float
    M: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs + EXACT_TOL


def check_visintin_inequality(input1: PiecewiseLinearInput, input2: PiecewiseLinearInput,
                              gamma_l, gamma_r, w01: float, w02: float,
                              t1: float, t2: float) -> VisintinReport:
    """Evaluate both sides of the play's L-infinity continuity estimate on [t1, t2]."""
    if input1.ts[0] != input2.ts[0] or input1.ts[-1] != input2.ts[-1]:
        raise ValueError("inputs must share the same time hull")
    if not input1.ts[0] <= t1 <= t2 <= input1.ts[-1]:
        raise ValueError(f"[{t1}, {t2}] is not inside the time hull")
    nodes = np.union1d(kink_times(input1, gamma_l, gamma_r, w01),
                       kink_times(input2, gamma_l, gamma_r, w02))
    nodes = np.union1d(nodes, [t1, t2])
    nodes = nodes[(nodes >= t1) & (nodes <= t2)]
    e1 = play_values_at(input1, gamma_l, gamma_r, w01, nodes)
    e2 = play_values_at(input2, gamma_l, gamma_r, w02, nodes)
    lhs = float(np.max(np.abs(e1 - e2)))
    input_gap = float(np.max(np.abs(input1.eval(nodes) - input2.eval(nodes))))
    M = max(input1.max_abs(), input2.max_abs())
    initial_gap = abs(float(e1[0] - e2[0]))
    rhs = max(initial_gap, _modulus_pair(gamma_l, gamma_r, M, input_gap))
    return VisintinReport(lhs, rhs, initial_gap, input_gap, M)


def warp_input(inp: PiecewiseLinearInput, reparam: Sequence[Tuple[float, float]]):
    """Compose the input with the inverse of a piecewise-linear time map.

    ``reparam`` lists (t, tau) pairs of a strictly increasing map fixing both
    endpoints of the input's time hull. Returns the warped input and the
    warped positions of the original breakpoints.
    """
    src = np.array([p[0] for p in reparam], dtype=float)
    dst = np.array([p[1] for p in reparam], dtype=float)
    if len(src) < 2 or np.any(np.diff(src) <= 0) or np.any(np.diff(dst) <= 0):
        raise ValueError("time reparametrization must be strictly increasing")
    t0, tn = inp.ts[0], inp.ts[-1]
    if not (math.isclose(src[0], t0, abs_tol=EXACT_TOL) and math.isclose(dst[0], t0, abs_tol=EXACT_TOL)
            and math.isclose(src[-1], tn, abs_tol=EXACT_TOL)
            and math.isclose(dst[-1], tn, abs_tol=EXACT_TOL)):
        raise ValueError("time reparametrization must fix the endpoints")
    nodes = np.union1d(inp.ts, src[(src > t0) & (src < tn)])
    values = inp.eval(nodes)
    warped_nodes = np.interp(nodes, src, dst)
    # keep original breakpoint values bit-exact
    values[np.searchsorted(nodes, inp.ts)] = inp.us
    return PiecewiseLinearInput(tuple(warped_nodes), tuple(values)), np.interp(inp.ts, src, dst)


def check_rate_independence(gamma_l, gamma_r, w0: float, inp: PiecewiseLinearInput,
                            reparam: Sequence[Tuple[float, float]]) -> bool:
    warped, at = warp_input(inp, reparam)
    base = oracle_play(inp, gamma_l, gamma_r, w0)
    moved = play_values_at(warped, gamma_l, gamma_r, w0, at)
    return bool(np.all(np.abs(base - moved) <= EXACT_TOL))


@dataclass
class PairResult:
    u1: float
    u2: float
    poincare_gap: float
    start_gap: float
    pointwise_violations: int
    worst_increase: float
    first_bad_step: int

    @property
    def poincare_ok(self) -> bool:
        return self.poincare_gap <= self.start_gap + INTEGRATED_TOL

    @property
    def pointwise_ok(self) -> bool:
        return self.pointwise_violations == 0

    @property
    def ok(self) -> bool:
        return self.poincare_ok and self.pointwise_ok


@dataclass
class NonExpansiveReport:
    pairs: List[PairResult]

    @property
    def ok(self) -> bool:
        return all(p.ok for p in self.pairs)

    @property
    def poincare_ok(self) -> bool:
        return all(p.poincare_ok for p in self.pairs)


def check_poincare_nonexpansive(config: SimConfig,
                                u0_pairs: Sequence[Tuple[float, float]]) -> NonExpansiveReport:
    """One-period gap check for each pair of starting points.

    Both members use the config's initial-memory rule at their own start.
    The pointwise check runs at every Euler step with tolerance
    ``1e-12 * max(1, |u|)``.
    """
    T = config.signal.period()
    if T is None:
        raise ValueError("non-expansiveness check needs a periodic signal")
    n, dt = period_steps(T, config.dt)
    xs, ys, npts, lsl, rsl, weights = config.model.pack()
    code, p, tab_t, tab_r = config.signal.kernel_params()
    results = []
    for u1, u2 in u0_pairs:
        P1, _ = poincare_map(config, None, u1)
        P2, _ = poincare_map(config, None, u2)
        m1 = initial_memories(config, u1)
        m2 = initial_memories(config, u2)
        _, _, n_bad, worst, first = _kernel.run_pair(
            xs, ys, npts, lsl, rsl, weights, config.model.offset, m1, m2, float(u1),
            float(u2), 0.0, dt, n, float(config.K), code, p, tab_t, tab_r, EXACT_TOL)
        results.append(PairResult(u1, u2, abs(P1 - P2), abs(u1 - u2), int(n_bad), float(worst),
                                  int(first)))
    return NonExpansiveReport(results)


# --- random case generators ---------------------------------------------------

def random_curve_pair(rng: np.random.Generator, max_points: int = 6,
                      span: float = 3.0) -> Tuple[PiecewiseLinearCurve, PiecewiseLinearCurve]:
    """Random ordered pair gamma_r <= gamma_l of non-decreasing curves (with flats)."""
    for _ in range(1000):
        def knots():
            k = int(rng.integers(2, max_points + 1))
            return np.unique(np.round(rng.uniform(-span, span, k), 6))

        xr = knots()
        if len(xr) < 2:
            continue
        steps = rng.exponential(1.0, len(xr) - 1) * (rng.random(len(xr) - 1) > 0.3)
        yr = rng.uniform(-2, 1) + np.concatenate([[0.0], np.cumsum(steps)])
        ext = [CONSTANT, LINEAR][int(rng.integers(0, 2))], [CONSTANT, LINEAR][int(rng.integers(0, 2))]
        gamma_r = PiecewiseLinearCurve(tuple(xr), tuple(yr), *ext)
        xl = knots() if rng.random() < 0.5 else xr
        if len(xl) < 2:
            continue
        gap = rng.uniform(0, 1.5, len(xl)) * (rng.random(len(xl)) > 0.2)
        yl = np.maximum.accumulate(gamma_r.eval_array(xl) + gap)
        gamma_l = PiecewiseLinearCurve(tuple(xl), tuple(yl), *ext)
        try:
            check_curve_order(gamma_l, gamma_r)
        except CurveOrderError:
            continue
        return gamma_l, gamma_r
    raise RuntimeError("could not draw an ordered curve pair")


def random_input(rng: np.random.Generator, n_points: Optional[int] = None,
                 t_end: float = 1.0, amplitude: float = 4.0) -> PiecewiseLinearInput:
    n = int(rng.integers(2, 25)) if n_points is None else n_points
    inner = np.sort(rng.uniform(0, t_end, max(0, n - 2)))
    ts = np.unique(np.concatenate([[0.0], inner, [t_end]]))
    us = rng.uniform(-amplitude, amplitude, len(ts))
    return PiecewiseLinearInput(tuple(ts), tuple(us))


def random_admissible_memory(rng, gamma_l, gamma_r, u0: float) -> float:
    lo, hi = gamma_r.eval(u0), gamma_l.eval(u0)
    return float(rng.uniform(lo, hi)) if hi > lo else lo


def random_warp(rng: np.random.Generator, t0: float, tn: float,
                n_knots: Optional[int] = None) -> List[Tuple[float, float]]:
    k = int(rng.integers(1, 8)) if n_knots is None else n_knots
    src = np.sort(rng.uniform(t0, tn, k))
    dst = np.sort(rng.uniform(t0, tn, k))
    src = np.unique(np.concatenate([[t0], src, [tn]]))
    dst = np.unique(np.concatenate([[t0], dst, [tn]]))
    if len(src) != len(dst):
        return random_warp(rng, t0, tn, n_knots)
    return list(zip(src.tolist(), dst.tolist()))


# --- campaigns ----------------------------------------------------------------

def random_u0_pairs(seed: int, n: int, lo: float, hi: float) -> List[Tuple[float, float]]:
    """``n`` distinct starting pairs drawn uniformly from ``[lo, hi]``."""
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < n:
        a, b = (float(v) for v in rng.uniform(lo, hi, 2))
        if abs(a - b) > 1e-3 * (hi - lo):
            pairs.append((a, b))
    return pairs


@dataclass
class CaseResult:
    check: str
    case: int
    passed: bool
    value: float = 0.0
    bound: float = 0.0


@dataclass
class VerificationReport:
    seed: int
    cases: List[CaseResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.cases)

    def failures(self, check: Optional[str] = None) -> List[CaseResult]:
        return [c for c in self.cases if not c.passed and (check is None or c.check == check)]

    def summary(self) -> dict:
        out = {}
        for c in self.cases:
            n, bad = out.get(c.check, (0, 0))
            out[c.check] = (n + 1, bad + (not c.passed))
        return out

    def to_text(self) -> str:
        lines = [f"verification campaign (seed {self.seed})"]
        for check, (n, bad) in self.summary().items():
            lines.append(f"  {'PASS' if bad == 0 else 'FAIL'}  {check}: {n - bad}/{n} cases")
        lines.append("overall: " + ("PASS" if self.ok else "FAIL"))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("check,case,passed,value,bound\n")
        for c in self.cases:
            buf.write(f"{c.check},{c.case},{int(c.passed)},{c.value!r},{c.bound!r}\n")
        return buf.getvalue()


def oracle_campaign(rng, n_cases: int, report: VerificationReport) -> None:
    for i in range(n_cases):
        gl, gr = random_curve_pair(rng)
        inp = random_input(rng)
        w0 = random_admissible_memory(rng, gl, gr, inp.us[0]) + rng.normal(0, 0.5)
        play = GeneralizedPlay(gl, gr)
        play.init(inp.us[0], w0)
        stream = np.array([play.w] + play.process(inp.us[1:]))
        oracle = oracle_play(inp, gl, gr, w0, refinement=int(rng.integers(1, 20)))
        err = float(np.max(np.abs(stream - oracle)))
        report.cases.append(CaseResult("oracle_equivalence", i, err <= EXACT_TOL, err, EXACT_TOL))


def visintin_campaign(rng, n_cases: int, report: VerificationReport) -> None:
    for i in range(n_cases):
        gl, gr = random_curve_pair(rng)
        in1 = random_input(rng)
        in2 = random_input(rng)
        w01 = random_admissible_memory(rng, gl, gr, in1.us[0])
        w02 = random_admissible_memory(rng, gl, gr, in2.us[0])
        t1, t2 = np.sort(rng.uniform(0, 1, 2))
        rep = check_visintin_inequality(in1, in2, gl, gr, w01, w02, float(t1), float(t2))
        report.cases.append(CaseResult("visintin_inequality", i, rep.ok, rep.lhs, rep.rhs))


def rate_independence_campaign(rng, n_cases: int, report: VerificationReport) -> None:
    for i in range(n_cases):
        gl, gr = random_curve_pair(rng)
        inp = random_input(rng)
        w0 = random_admissible_memory(rng, gl, gr, inp.us[0])
        warp = random_warp(rng, inp.ts[0], inp.ts[-1])
        report.cases.append(CaseResult("rate_independence", i,
                                       check_rate_independence(gl, gr, w0, inp, warp)))


def order_preservation_campaign(rng, n_cases: int, report: VerificationReport) -> None:
    for i in range(n_cases):
        gl, gr = random_curve_pair(rng)
        inp = random_input(rng)
        lift = rng.uniform(0, 1, len(inp))
        upper = PiecewiseLinearInput(inp.ts, tuple(np.asarray(inp.us) + lift))
        w_lo = random_admissible_memory(rng, gl, gr, inp.us[0])
        w_hi = w_lo + rng.uniform(0, 1)
        lo = oracle_play(inp, gl, gr, w_lo)
        hi = oracle_play(upper, gl, gr, w_hi)
        worst = float(np.max(lo - hi))
        report.cases.append(CaseResult("order_preservation", i, worst <= EXACT_TOL, worst, 0.0))


def run_campaign(seed: int = 20240601, n_oracle: int = 1000, n_visintin: int = 1000,
                 n_warps: int = 100, n_order: int = 100,
                 periodic: Optional[SimConfig] = None,
                 u0_pairs: Sequence[Tuple[float, float]] = ()) -> VerificationReport:
    """Seeded property campaign; each check draws from its own child stream."""
    streams = np.random.SeedSequence(seed).spawn(4)
    report = VerificationReport(seed)
    oracle_campaign(np.random.default_rng(streams[0]), n_oracle, report)
    visintin_campaign(np.random.default_rng(streams[1]), n_visintin, report)
    rate_independence_campaign(np.random.default_rng(streams[2]), n_warps, report)
    order_preservation_campaign(np.random.default_rng(streams[3]), n_order, report)
    if periodic is not None and u0_pairs:
        rep = check_poincare_nonexpansive(periodic, u0_pairs)
        for i, pr in enumerate(rep.pairs):
            report.cases.append(CaseResult("poincare_nonexpansive", i, pr.poincare_ok,
                                           pr.poincare_gap, pr.start_gap))
            report.cases.append(CaseResult("pointwise_contraction", i, pr.pointwise_ok,
                                           pr.worst_increase, EXACT_TOL))
    return report
