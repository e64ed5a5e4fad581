import io
import math

import numpy as np
import pytest

from kpcomp.analysis import (SWEEP_HEADER, EstimationError, Limit, NotSteadyError,
                             convergence_fit, convergence_rate, decay_window, equilibria,
                             error_bound, frequency_sweep, omega_limit_check,
                             steady_state_max_error, write_sweep_csv)
from kpcomp.kp_model import KPModel, PlayElement, make_saturated_play
from kpcomp.signals import HillGauss, Sinusoid, Step, Table
from kpcomp.simulator import SimConfig, Trace, find_periodic, simulate

MODEL = KPModel.default()
CLASSICAL = KPModel([PlayElement(1.0, make_saturated_play(1.0, 0.0, 4.0))])


def synthetic(e):
    t = np.linspace(0, 1, len(e))
    return Trace(t, np.zeros_like(t), np.zeros_like(t), -e, e)


def test_error_bound():
    assert error_bound(2, 4) == 6
    assert error_bound(0.1, 4) == pytest.approx(4.1)
    for bad in ((0, 4), (5, 4), (-1, 4)):
        with pytest.raises(ValueError):
            error_bound(*bad)


def test_equilibria_classical_play():
    eq = equilibria(CLASSICAL, 2.0)
    assert (eq.u1, eq.u2) == (1.0, 3.0)
    assert not eq.degenerate


def test_equilibria_boundary_and_outside():
    eq = equilibria(CLASSICAL, 0.0)
    assert eq.degenerate and eq.u2_unbounded
    eq = equilibria(CLASSICAL, 5.0)
    assert eq.u1 is None and eq.u2 is None


def test_equilibria_default_model_against_scan():
    eq = equilibria(MODEL, 2.0)
    assert eq.u1 == pytest.approx(0.0, abs=1e-15)
    assert eq.u2 == pytest.approx(17 / 12, abs=1e-15)
    gl, gr = MODEL.aggregate_envelopes()
    grid = np.linspace(-3, 3, 600001)
    assert grid[gl.eval_array(grid) <= 2.0].max() == pytest.approx(eq.u1, abs=1e-5)
    assert grid[gr.eval_array(grid) >= 2.0].min() == pytest.approx(eq.u2, abs=1e-5)


def test_equilibria_consistency():
    gl, gr = MODEL.aggregate_envelopes()
    for R in np.linspace(0.05, 3.95, 40):
        eq = equilibria(MODEL, R)
        assert eq.u1 <= eq.u2
        assert gl.eval(eq.u1) == pytest.approx(R, abs=1e-9)
        assert gr.eval(eq.u2) == pytest.approx(R, abs=1e-9)


def test_rate_of_exact_exponential():
    t = np.linspace(0, 1, 1001)
    tr = Trace(t, 0 * t, 0 * t, 0 * t, 3.0 * np.exp(-7.5 * t))
    assert convergence_rate(tr, (0.1, 0.9)) == pytest.approx(-7.5, rel=1e-6)
    assert convergence_fit(tr, (0.1, 0.9)).r_squared == pytest.approx(1.0)


def test_rate_errors():
    tr = synthetic(np.zeros(100))
    with pytest.raises(EstimationError):
        convergence_rate(tr, (0.1, 0.5))
    with pytest.raises(EstimationError):
        convergence_rate(synthetic(np.ones(100)), (0.5, 2.0))


def test_rate_on_slope_one_branch_equals_minus_K():
    single = KPModel([PlayElement(1.0, make_saturated_play(0.5))])
    for K in (10, 50):
        tr = simulate(SimConfig(single, Step(t_on=0.0), K=K, dt=1e-6, t_end=2.5,
                                record_stride=100))
        lo, hi = decay_window(tr, 0.05, 1e-8)
        assert convergence_rate(tr, (lo, hi)) == pytest.approx(-K, rel=1e-3)


def test_step_case_rate_ratio():
    rates = {}
    for K in (10, 50):
        tr = simulate(SimConfig(MODEL, Step(), K=K, dt=1e-6, t_end=2.0, record_stride=100))
        # start once u has passed the last kink below u2 (single branch segment)
        t_in = float(tr.t[np.argmax(tr.u > 1.25)])
        rates[K] = convergence_rate(tr, decay_window(tr, t_in, 1e-9))
    assert rates[10] == pytest.approx(-30, rel=0.02)
    assert rates[50] / rates[10] == pytest.approx(5, rel=0.02)


def test_steady_state_constant_input():
    cfg = SimConfig(MODEL, Sinusoid(A0=2.0, A=0.0, omega=2 * math.pi), K=50, dt=1e-4,
                    t_end=4.0)
    tr = simulate(cfg)
    assert steady_state_max_error(tr, 1.0, 1) < 1e-9


def test_steady_state_errors():
    cfg = SimConfig(MODEL, Sinusoid(omega=2 * math.pi), K=10, dt=1e-4, t_end=1.5)
    tr = simulate(cfg)
    with pytest.raises(EstimationError):
        steady_state_max_error(tr, 1.0, 1)
    tr = simulate(cfg.replace(u0=3.0, t_end=2.0))
    with pytest.raises(NotSteadyError) as info:
        steady_state_max_error(tr, 1.0, 1, tol=1e-12)
    assert info.value.residual > 1e-12


def test_omega_limit_branches():
    sig = Table(((0.0, 2.0), (1.0, 2.0)))
    eq = equilibria(CLASSICAL, 2.0)
    below = simulate(SimConfig(CLASSICAL, sig, K=20, dt=1e-4, t_end=3.0, u0=-1.0))
    above = simulate(SimConfig(CLASSICAL, sig, K=20, dt=1e-4, t_end=3.0, u0=6.0))
    assert omega_limit_check(below, eq, 1e-6) is Limit.U2
    assert omega_limit_check(above, eq, 1e-6) is Limit.U1
    moving = simulate(SimConfig(CLASSICAL, sig, K=0.1, dt=1e-3, t_end=1.0, u0=-1.0))
    assert omega_limit_check(moving, eq, 1e-6) is Limit.NOT_CONVERGED


def test_omega_limit_stride_invariant():
    eq = equilibria(MODEL, 2.0)
    base = SimConfig(MODEL, HillGauss(), K=10, dt=1e-5, t_end=4.0)
    labels = {omega_limit_check(simulate(base.replace(record_stride=s)), eq, 1e-4)
              for s in (1, 10, 100)}
    assert len(labels) == 1


def test_hillgauss_tail_inside_equilibrium_interval():
    eq = equilibria(MODEL, 2.0)
    for K in (10, 50):
        tr = simulate(SimConfig(MODEL, HillGauss(), K=K, dt=1e-5, t_end=5.0))
        assert omega_limit_check(tr, eq, 1e-4) in (Limit.U1, Limit.U2, Limit.BETWEEN)


def test_sweep_shape_and_trend():
    base = SimConfig(MODEL, Sinusoid(), K=10, dt=1e-3)
    omegas = [0.1 / (2 * math.pi), 1 / (2 * math.pi)]
    table = frequency_sweep(base, omegas[::-1], [50, 10])
    assert [(r.omega, r.K) for r in table.rows] == [(w, k) for w in omegas for k in (10.0, 50.0)]
    assert all(r.status == "ok" for r in table.rows)
    for K in table.gains():
        errs = [r.max_abs_e_steady for r in table.for_gain(K)]
        assert errs == sorted(errs)
    for a, b in zip(table.for_gain(10.0), table.for_gain(50.0)):
        assert b.max_abs_e_steady < a.max_abs_e_steady
        assert a.max_abs_e_steady < error_bound(2.1, 4.0)
    buf = io.StringIO()
    write_sweep_csv(table, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER) and len(lines) == 5
    assert float(lines[1].split(",")[1]) == pytest.approx(0.1, rel=1e-15)


def test_sweep_matches_find_periodic():
    base = SimConfig(MODEL, Sinusoid(), K=50, dt=1e-3)
    table = frequency_sweep(base, [1 / (2 * math.pi)], [50])
    per = find_periodic(base, tol=1e-9)
    assert table.rows[0].max_abs_e_steady == pytest.approx(float(np.max(np.abs(per.e))),
                                                           rel=1e-6)


def test_sweep_ignores_coarse_base_stride():
    # a stride sized for slow inputs would skip the error peak at high frequency
    fine = SimConfig(MODEL, Sinusoid(), K=10, dt=1e-4)
    coarse = fine.replace(record_stride=1000)
    omega = [10 / (2 * math.pi)]
    a = frequency_sweep(fine, omega, [10]).rows[0].max_abs_e_steady
    b = frequency_sweep(coarse, omega, [10]).rows[0].max_abs_e_steady
    assert a == b


def test_sweep_requires_sinusoid():
    with pytest.raises(ValueError):
        frequency_sweep(SimConfig(MODEL, Step()), [1.0], [10])
