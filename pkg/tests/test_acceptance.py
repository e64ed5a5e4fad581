"""Acceptance criteria 1-10, one test each.

Every test records a one-line verdict; the lines are printed at the end of
the pytest session (see conftest.py) and by ``python tests/test_acceptance.py``.
"""
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from kpcomp.analysis import (Limit, convergence_fit, decay_window, equilibria, error_bound,
                             omega_limit_check)
from kpcomp.cli import main as cli_main
from kpcomp.config import load
from kpcomp.simulator import Trace, find_periodic, simulate
from kpcomp.verification import check_poincare_nonexpansive, random_u0_pairs, run_campaign

SEED = 20240601
RESULTS = {}

# (config, subcommand, csv files it writes)
CLI_RUNS = [
    ("step.cfg", "simulate", ["trace_K10.csv", "trace_K50.csv"]),
    ("hillgauss.cfg", "simulate", ["trace_K10.csv", "trace_K50.csv"]),
    ("periodic.cfg", "periodic", ["periodic_K10.csv", "periodic_K50.csv"]),
    ("periodic.cfg", "sweep", ["sweep.csv"]),
]


def record(n, ok, detail):
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[n])
    return ok


def _both_gains(fn, gains):
    with ThreadPoolExecutor(max_workers=len(gains)) as pool:
        return dict(zip(gains, pool.map(fn, gains)))


@pytest.fixture(scope="module")
def cli_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    dirs = {}
    for cfg, sub, _ in CLI_RUNS:
        for rep in ("a", "b"):
            out = root / f"{cfg}-{sub}-{rep}"
            code = cli_main([sub, "--config", cfg, "--out", str(out)])
            assert code == 0, f"{sub} {cfg} exited {code}"
            dirs[cfg, sub, rep] = out
    return dirs


def _trace(dirs, cfg, sub, name):
    return Trace.from_csv(dirs[cfg, sub, "a"] / name)


def test_criterion_01_oracle_equivalence():
    t0 = time.perf_counter()
    rep = run_campaign(SEED, n_oracle=1000, n_visintin=0, n_warps=0, n_order=0)
    elapsed = time.perf_counter() - t0
    n, bad = rep.summary()["oracle_equivalence"]
    ok = n == 1000 and bad == 0 and elapsed < 10
    assert record(1, ok, f"{n - bad}/{n} inputs match the oracle to 1e-12 in {elapsed:.2f} s")


def test_criterion_02_visintin_inequality():
    rep = run_campaign(SEED, n_oracle=0, n_visintin=1000, n_warps=0, n_order=0)
    n, bad = rep.summary()["visintin_inequality"]
    worst = max(c.value - c.bound for c in rep.cases)
    assert record(2, n == 1000 and bad == 0,
                  f"{bad} violations in {n} pairs (max lhs - rhs = {worst:.3e})")


def test_criterion_03_rate_independence():
    rep = run_campaign(SEED, n_oracle=0, n_visintin=0, n_warps=100, n_order=0)
    n, bad = rep.summary()["rate_independence"]
    assert record(3, n == 100 and bad == 0, f"{n - bad}/{n} warps leave outputs unchanged")


def test_criterion_04_boundedness():
    cfg = load("periodic.cfg")
    sig = cfg.build_signal()
    T = sig.period()
    model = cfg.build_model()
    r_lo, r_hi = sig.A0 - abs(sig.A), sig.A0 + abs(sig.A)
    lo = equilibria(model, r_lo).u1 - 1.0
    hi = equilibria(model, r_hi).u2 + 1.0

    def run(K):
        sc = cfg.sim_config(K).replace(t_end=50 * T, record_stride=1_000_000)
        return simulate(sc)

    traces = _both_gains(run, cfg.gains)
    ok = all(lo <= tr.meta["min_u"] and tr.meta["max_u"] <= hi for tr in traces.values())
    spans = ", ".join(f"K={K:g}: u in [{tr.meta['min_u']:.4f}, {tr.meta['max_u']:.4f}]"
                      for K, tr in traces.items())
    assert record(4, ok, f"box [{lo:.4f}, {hi:.4f}] over 50 T; {spans}")


def test_criterion_05_constant_input_convergence(cli_runs):
    cfg = load("step.cfg")
    model = cfg.build_model()
    R = cfg.build_signal().R
    eq = equilibria(model, R)
    _, gr = model.aggregate_envelopes()
    # last envelope kink below u2: past it the trajectory stays on one linear segment
    kink = max(x for x in gr.xs if x < eq.u2)
    rates, r2, reached = {}, {}, {}
    for K in cfg.gains:
        tr = _trace(cli_runs, "step.cfg", "simulate", f"trace_K{K:g}.csv")
        # time after which |e| stays below 1e-6 for the rest of the run
        above = np.nonzero(np.abs(tr.e) >= 1e-6)[0]
        if len(above) == 0:
            reached[K] = float(tr.t[0])
        elif above[-1] + 1 < len(tr):
            reached[K] = float(tr.t[above[-1] + 1])
        else:
            reached[K] = math.inf
        t_in = float(tr.t[np.argmax(tr.u > kink)])
        fit = convergence_fit(tr, decay_window(tr, t_in, 1e-9))
        rates[K], r2[K] = fit.slope, fit.r_squared
    ratio = rates[50.0] / rates[10.0]
    ok = (all(t < 2.0 for t in reached.values()) and all(v >= 0.99 for v in r2.values())
          and 4 <= ratio <= 6)
    assert record(5, ok, "; ".join(
        f"K={K:g}: |e|<1e-6 at t={reached[K]:.3f} s, rate={rates[K]:.3f}/s, R2={r2[K]:.5f}"
        for K in cfg.gains) + f"; ratio={ratio:.3f}")


def test_criterion_06_omega_limit(cli_runs):
    cfg = load("hillgauss.cfg")
    eq = equilibria(cfg.build_model(), cfg.build_signal().R_inf)
    tol = cfg.analysis.omega_limit_tol
    parts, ok = [], True
    for K in cfg.gains:
        tr = _trace(cli_runs, "hillgauss.cfg", "simulate", f"trace_K{K:g}.csv")
        label = omega_limit_check(tr, eq, tol)
        e_end = abs(tr.e[-1])
        ok &= label in (Limit.U1, Limit.U2, Limit.BETWEEN) and e_end < 1e-5
        parts.append(f"K={K:g}: {label.value} (u_end={tr.u[-1]:.6f}), |e_end|={e_end:.2e}")
    assert record(6, ok, f"[u1, u2] = [{eq.u1:.6f}, {eq.u2:.6f}]; " + "; ".join(parts))


def test_criterion_07_periodic_solution():
    cfg = load("periodic.cfg")
    tol = cfg.analysis.periodic_tol
    model = cfg.build_model()
    gl, gr = model.aggregate_envelopes()
    pairs = random_u0_pairs(SEED, 10, float(gl.xs[0]), float(gr.xs[-1]))

    def run(K):
        sc = cfg.sim_config(K)
        a = find_periodic(sc, tol=tol, max_iter=cfg.analysis.max_iter)
        b = find_periodic(sc.replace(u0=2.0), tol=tol, max_iter=cfg.analysis.max_iter)
        return a, b, check_poincare_nonexpansive(sc, pairs)

    out = _both_gains(run, cfg.gains)
    conv = all(a.meta["residual"] < tol for a, _, _ in out.values())
    same = max(float(np.max(np.abs(a.u - b.u))) for a, b, _ in out.values())
    poincare = all(rep.poincare_ok for _, _, rep in out.values())
    n_point = sum(p.pointwise_ok for _, _, rep in out.values() for p in rep.pairs)
    n_pairs = sum(len(rep.pairs) for _, _, rep in out.values())
    ok = conv and same <= 1e-8 and poincare and n_point == n_pairs
    worst = max(p.worst_increase for _, _, rep in out.values() for p in rep.pairs)
    assert record(7, ok, f"residual<{tol:g}: {conv}; seed gap {same:.1e}; "
                         f"Poincare non-expansive: {poincare}; pointwise non-increase "
                         f"{n_point}/{n_pairs} pairs (largest one-step growth {worst:.2e})")


def test_criterion_08_error_bound(cli_runs):
    H_max = load("step.cfg").build_model().output_cap
    checked, worst_ratio, ok = 0, 0.0, True
    for cfg, sub, files in CLI_RUNS:
        if sub == "sweep":
            continue
        for name in files:
            tr = _trace(cli_runs, cfg, sub, name)
            bound = error_bound(float(np.max(tr.r)), H_max)
            m = float(np.max(np.abs(tr.e)))
            ok &= bool(np.all(np.abs(tr.e) <= bound)) and m < bound
            worst_ratio = max(worst_ratio, m / bound)
            checked += len(tr)
    sig = load("periodic.cfg").build_signal()
    sweep_bound = error_bound(sig.A0 + abs(sig.A), H_max)
    rows = np.genfromtxt(cli_runs["periodic.cfg", "sweep", "a"] / "sweep.csv", delimiter=",",
                         names=True)
    ok &= bool(np.all(rows["max_abs_e"] < sweep_bound))
    assert record(8, ok, f"{checked} trace rows and {len(rows)} sweep cells inside "
                         f"R_inf + H; largest max|e| / bound = {worst_ratio:.3f}")


def test_criterion_09_frequency_sweep(cli_runs):
    rows = np.genfromtxt(cli_runs["periodic.cfg", "sweep", "a"] / "sweep.csv", delimiter=",",
                         names=True)
    ok = len(rows) == 8
    by_K = {}
    for K in (10.0, 50.0):
        sel = rows[rows["K"] == K]
        sel = sel[np.argsort(sel["omega_rad_s"])]
        by_K[K] = sel["max_abs_e"]
        ok &= len(sel) == 4 and bool(np.all(np.diff(sel["max_abs_e"]) >= 0))
    ok &= bool(np.all(by_K[50.0] < by_K[10.0]))
    detail = "; ".join(f"K={K:g}: " + ", ".join(f"{v:.3g}" for v in errs)
                       for K, errs in by_K.items())
    assert record(9, ok, f"steady max|e| at 2πω = 0.01, 0.1, 1, 10 Hz -> {detail}")


def test_criterion_10_determinism(cli_runs):
    compared, differing = 0, []
    for cfg, sub, files in CLI_RUNS:
        for name in files:
            a = (cli_runs[cfg, sub, "a"] / name).read_bytes()
            b = (cli_runs[cfg, sub, "b"] / name).read_bytes()
            compared += 1
            if a != b:
                differing.append(f"{cfg}:{name}")
    assert record(10, not differing,
                  f"{compared} CSVs re-generated byte-identically" if not differing
                  else f"differ: {', '.join(differing)}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
