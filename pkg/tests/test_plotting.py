import math
import re

import numpy as np
import pytest

from kpcomp.analysis import SweepRow, SweepTable
from kpcomp.kp_model import KPModel
from kpcomp.plotting import KINDS, MAX_POINTS, plot, render
from kpcomp.signals import Step
from kpcomp.simulator import SimConfig, Trace, simulate


@pytest.fixture(scope="module")
def trace():
    return simulate(SimConfig(KPModel.default(), Step(), K=10, dt=1e-5, t_end=1.0))


def sweep_table():
    rows = [SweepRow(w / (2 * math.pi), K, 0.01 * w / K * 10, 2)
            for w in (0.01, 0.1, 1, 10) for K in (10.0, 50.0)]
    return SweepTable(rows)


@pytest.mark.parametrize("kind", ["error_vs_t", "log_error_vs_t", "loop_w_vs_u"])
def test_trace_plots_are_deterministic(trace, kind, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    plot(trace, kind, a)
    plot(trace, kind, b)
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.startswith("<svg") and text.count("<polyline") == 1
    pts = re.search(r'points="([^"]*)"', text).group(1).split()
    assert len(pts) <= MAX_POINTS


def test_empty_trace_has_axes_only():
    svg = render(Trace.empty(), "error_vs_t")
    assert "<rect" in svg and "<text" in svg
    assert "<polyline" not in svg and "<path" not in svg


def test_sweep_plot_has_two_labelled_series():
    svg = render(sweep_table(), "sweep_loglog")
    lines = re.findall(r'points="([^"]*)"', svg)
    assert len(lines) == 2 and all(len(p.split()) == 4 for p in lines)
    assert "K=10" in svg and "K=50" in svg
    assert "2πω" in svg


def test_log_plot_floors_zero_error():
    t = np.linspace(0, 1, 5)
    svg = render({"t": t, "e": np.zeros(5)}, "log_error_vs_t")
    assert "nan" not in svg and "inf" not in svg


def test_bad_inputs():
    with pytest.raises(ValueError):
        render({"t": [0, 1]}, "error_vs_t")
    with pytest.raises(ValueError):
        render(Trace.empty(), "spectrogram")
    with pytest.raises(ValueError):
        render(Trace.empty(), "sweep_loglog")
    assert set(KINDS) == {"error_vs_t", "log_error_vs_t", "sweep_loglog", "loop_w_vs_u"}


def test_decimation_keeps_peak():
    t = np.linspace(0, 1, 100001)
    e = np.zeros_like(t)
    e[54321] = 1.0
    svg = render({"t": t, "e": e}, "error_vs_t")
    ys = [float(p.split(",")[1]) for p in re.search(r'points="([^"]*)"', svg).group(1).split()]
    assert min(ys) < 40  # the spike reaches the top of the plot area
