"""Feedforward compensation of KP-type hysteresis: operators, solver and analysis."""

__version__ = "0.1.0"

from .curves import PiecewiseLinearCurve, curve_sum
from .play import GeneralizedPlay
from .kp_model import KPModel, PlayElement, make_saturated_play
from .signals import HillGauss, Sinusoid, Step, Table, signal_from_dict
from .simulator import SimConfig, Trace, find_periodic, poincare_map, simulate
from .analysis import (EquilibriumPair, SweepTable, convergence_rate, equilibria, error_bound,
                       frequency_sweep, omega_limit_check, steady_state_max_error)
from .estimators import FeedforwardCompensator, KPHysteresis

__all__ = [
    "PiecewiseLinearCurve", "curve_sum", "GeneralizedPlay", "KPModel", "PlayElement",
    "make_saturated_play", "HillGauss", "Sinusoid", "Step", "Table", "signal_from_dict",
    "SimConfig", "Trace", "find_periodic", "poincare_map", "simulate", "EquilibriumPair",
    "SweepTable", "convergence_rate", "equilibria", "error_bound", "frequency_sweep",
    "omega_limit_check", "steady_state_max_error", "FeedforwardCompensator", "KPHysteresis",
]
