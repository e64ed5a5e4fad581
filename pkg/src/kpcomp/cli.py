"""``kpcomp <subcommand> --config PATH [--set key=value]... [--out DIR]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import (EstimationError, SweepTable, equilibria, error_bound, frequency_sweep,
                       convergence_fit, decay_window)
from .config import ConfigError, ExperimentConfig, load
from .plotting import plot
from .signals import Sinusoid
from .simulator import (NonConvergenceError, NumericalDivergenceError, Trace, find_periodic,
                        simulate)
from .verification import random_u0_pairs, run_campaign

SUBCOMMANDS = ("simulate", "sweep", "equilibria", "periodic", "verify")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _tag(K: float) -> str:
    return f"K{K:g}"


def _bound_line(cfg: ExperimentConfig, trace: Trace) -> str:
    if len(trace) == 0:
        return ""
    r_sup = float(np.max(trace.r))
    try:
        H_max = cfg.build_model().output_cap
        bound = error_bound(r_sup, H_max)
    except ValueError:
        return " bound=n/a"
    max_e = float(np.max(np.abs(trace.e)))
    return f" bound={bound:.6g} {'ok' if max_e <= bound else 'VIOLATED'}"


def _plots(cfg, trace, stem: str, out: Path, kinds: Sequence[str]) -> None:
    if not cfg.output.plots:
        return
    for kind in kinds:
        plot(trace, kind, out / f"{kind}_{stem}.svg", title=f"{kind} {stem}")


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> int:
    for K in cfg.gains:
        trace = simulate(cfg.sim_config(K))
        trace.to_csv(out / f"trace_{_tag(K)}.csv")
        _plots(cfg, trace, _tag(K), out, ("error_vs_t", "log_error_vs_t", "loop_w_vs_u"))
        line = (f"simulate {_tag(K)}: steps={trace.meta['n_steps']} rows={len(trace)} "
                f"u_end={trace.final_u:.10g} |e_end|={abs(trace.e[-1]):.3e} "
                f"max|e|={trace.meta['max_abs_e']:.6g}")
        window = cfg.analysis.rate_window
        if window is not None:
            try:
                lo, hi = decay_window(trace, window[0], cfg.analysis.e_stop)
                fit = convergence_fit(trace, (lo, min(hi, window[1])))
                line += f" rate={fit.slope:.6g}/s R2={fit.r_squared:.5f}"
            except EstimationError as exc:
                line += f" rate=n/a ({exc})"
        print(line + _bound_line(cfg, trace))
    return EXIT_OK


def cmd_periodic(cfg: ExperimentConfig, out: Path) -> int:
    a = cfg.analysis
    for K in cfg.gains:
        trace = find_periodic(cfg.sim_config(K), tol=a.periodic_tol, max_iter=a.max_iter)
        trace.to_csv(out / f"periodic_{_tag(K)}.csv")
        _plots(cfg, trace, _tag(K), out, ("error_vs_t", "loop_w_vs_u"))
        m = trace.meta
        print(f"periodic {_tag(K)}: residual={m['residual']:.3e} periods={m['iterations']} "
              f"u_start={m['u_start']:.12g} max|e|={m['max_abs_e']:.6g}"
              + _bound_line(cfg, trace))
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, out: Path) -> int:
    omegas = cfg.analysis.sweep_omegas
    if not omegas:
        raise ConfigError("analysis.sweep_omegas: empty; nothing to sweep")
    base = cfg.sim_config(cfg.gains[0])
    if cfg.analysis.sweep_dt is not None:
        base = base.replace(dt=float(cfg.analysis.sweep_dt))
    if not isinstance(base.signal, Sinusoid):
        raise ConfigError("signal: sweep needs kind 'sinusoid'")
    table: SweepTable = frequency_sweep(base, omegas, cfg.gains,
                                        max_periods=cfg.analysis.sweep_max_periods)
    table.to_csv(out / "sweep.csv")
    if cfg.output.plots:
        plot(table, "sweep_loglog", out / "sweep_loglog.svg", title="steady-state max |e|")
    failed = 0
    for row in table.rows:
        print(f"sweep omega={row.omega:.6g} (2πω={row.freq_label_hz:.6g}) {_tag(row.K)}: "
              f"max|e|={row.max_abs_e_steady:.6g} periods={row.periods_discarded} "
              f"{row.status}")
        failed += row.status != "ok"
    return EXIT_NUMERIC if failed else EXIT_OK


def _constant_level(cfg: ExperimentConfig) -> float:
    if cfg.analysis.R is not None:
        return float(cfg.analysis.R)
    sig = cfg.build_signal()
    for attr in ("R_inf", "R"):
        if hasattr(sig, attr):
            return float(getattr(sig, attr))
    raise ConfigError("analysis.R: required for this signal kind")


def cmd_equilibria(cfg: ExperimentConfig, out: Path) -> int:
    R = _constant_level(cfg)
    eq = equilibria(cfg.build_model(), R)
    with open(out / "equilibria.csv", "w", newline="") as fh:
        fh.write("R,u1,u2,u1_unbounded,u2_unbounded\n")
        fh.write(",".join([repr(eq.R), repr(eq.u1), repr(eq.u2),
                           str(int(eq.u1_unbounded)), str(int(eq.u2_unbounded))]) + "\n")
    print(f"equilibria R={R:g}: u1={eq.u1!r} u2={eq.u2!r}"
          + (" (level set reaches a flat extension)" if eq.degenerate else ""))
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, out: Path) -> int:
    v = cfg.verify
    periodic, pairs = None, []
    if v.n_pairs > 0:
        base = cfg.sim_config(cfg.gains[0])
        if base.signal.period() is None:
            raise ConfigError("verify.n_pairs: needs a periodic signal")
        gl, gr = base.model.aggregate_envelopes()
        periodic = base
        pairs = random_u0_pairs(v.seed, v.n_pairs, float(gl.xs[0]), float(gr.xs[-1]))
    report = run_campaign(v.seed, v.n_oracle, v.n_visintin, v.n_warps, v.n_order,
                          periodic=periodic, u0_pairs=pairs)
    (out / "verify_report.txt").write_text(report.to_text())
    (out / "verify_cases.csv").write_text(report.to_csv())
    for check, (n, bad) in report.summary().items():
        print(f"verify {check}: {n - bad}/{n} {'PASS' if bad == 0 else 'FAIL'}")
    return EXIT_OK if report.ok else EXIT_FAILED


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "equilibria": cmd_equilibria,
            "periodic": cmd_periodic, "verify": cmd_verify}


def write_meta(cfg: ExperimentConfig, subcommand: str, out: Path) -> None:
    lines = [f"subcommand={subcommand}", f"config_sha256={cfg.digest()}",
             f"seed={cfg.verify.seed}", f"version={__version__}"]
    (out / "run.meta").write_text("\n".join(lines) + "\n")


def run(subcommand: str, config_path, overrides: Sequence[str] = (),
        out: Optional[str] = None) -> int:
    if subcommand not in COMMANDS:
        print(f"error: unknown subcommand {subcommand!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load(config_path, overrides)
        out_dir = Path(out if out is not None else cfg.output.dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_meta(cfg, subcommand, out_dir)
        return COMMANDS[subcommand](cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalDivergenceError, NonConvergenceError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kpcomp", description=__doc__)
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True,
                    help="config file, or the name of a shipped one (step.cfg, ...)")
    ap.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="KEY=VALUE", help="dotted-path override, repeatable")
    ap.add_argument("--out", default=None, help="output directory (default: output.dir)")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.overrides, args.out)


if __name__ == "__main__":
    sys.exit(main())
