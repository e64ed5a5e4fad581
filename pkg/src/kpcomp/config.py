"""Experiment configuration files (YAML) and dotted-path overrides."""
from __future__ import annotations

import copy
import hashlib
import math
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import yaml

from .curves import PiecewiseLinearCurve
from .kp_model import DEFAULT_ELEMENTS, VIRGIN, KPModel, PlayElement, make_saturated_play
from .play import GeneralizedPlay
from .signals import SignalSpec, Sinusoid, signal_from_dict
from .simulator import SimConfig

SHIPPED_DIR = Path(__file__).parent / "configs"


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads ``1e-6`` (no decimal point) as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+][0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def _parse(text: str):
    return yaml.load(text, Loader=_Loader)


class ConfigError(ValueError):
    pass


def _unknown(section: str, data: dict, allowed) -> None:
    extra = sorted(set(data) - set(allowed))
    if extra:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(extra)}")


def _float(section: str, key: str, value, positive=False, nonneg=False) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}: expected a number, got {value!r}") from None
    if math.isnan(v):
        raise ConfigError(f"{section}.{key}: NaN is not allowed")
    if positive and not v > 0:
        raise ConfigError(f"{section}.{key}: must be positive, got {v}")
    if nonneg and not v >= 0:
        raise ConfigError(f"{section}.{key}: must be nonnegative, got {v}")
    return v


@dataclass
class ModelBlock:
    elements: List[dict] = field(default_factory=lambda: [
        {"weight": a, "rho": rho, "sat_lo": lo, "sat_hi": hi, "scale": 1.0}
        for a, rho, lo, hi in DEFAULT_ELEMENTS])
    offset: float = 0.0

    def build(self) -> KPModel:
        elems = []
        for i, spec in enumerate(self.elements):
            where = f"model.elements[{i}]"
            weight = _float(where, "weight", spec.get("weight", 1.0), nonneg=True)
            try:
                if "gamma_l" in spec or "gamma_r" in spec:
                    _unknown(where, spec, ("weight", "gamma_l", "gamma_r"))
                    play = GeneralizedPlay(PiecewiseLinearCurve.from_dict(spec["gamma_l"]),
                                           PiecewiseLinearCurve.from_dict(spec["gamma_r"]))
                else:
                    _unknown(where, spec, ("weight", "rho", "sat_lo", "sat_hi", "scale"))
                    play = make_saturated_play(
                        _float(where, "rho", spec.get("rho", 0.0), nonneg=True),
                        _float(where, "sat_lo", spec.get("sat_lo", -math.inf)),
                        _float(where, "sat_hi", spec.get("sat_hi", math.inf)),
                        _float(where, "scale", spec.get("scale", 1.0), positive=True))
            except ConfigError:
                raise
            except (KeyError, ValueError, TypeError) as exc:
                raise ConfigError(f"{where}: {exc}") from None
            elems.append(PlayElement(weight, play))
        if not elems:
            raise ConfigError("model.elements: at least one element is required")
        return KPModel(elems, _float("model", "offset", self.offset))


@dataclass
class SolverBlock:
    K: List[float] = field(default_factory=lambda: [10.0, 50.0])
    dt: float = 1e-6
    t_end: float = 1.0
    u0: float = 0.0
    w0: Union[str, List[float]] = VIRGIN
    record_stride: Optional[int] = None


@dataclass
class AnalysisBlock:
    R: Optional[float] = None
    rate_window: Optional[List[float]] = None
    e_stop: float = 1e-9
    omega_limit_tol: float = 1e-4
    periodic_tol: float = 1e-9
    max_iter: int = 50
    sweep_omegas: List[float] = field(default_factory=list)
    sweep_max_periods: int = 50
    sweep_dt: Optional[float] = None


@dataclass
class VerifyBlock:
    seed: int = 20240601
    n_oracle: int = 1000
    n_visintin: int = 1000
    n_warps: int = 100
    n_order: int = 100
    n_pairs: int = 0


@dataclass
class OutputBlock:
    dir: str = "out"
    plots: bool = True


@dataclass
class ExperimentConfig:
    model: ModelBlock = field(default_factory=ModelBlock)
    signal: Dict[str, Any] = field(default_factory=lambda: Sinusoid().to_dict())
    solver: SolverBlock = field(default_factory=SolverBlock)
    analysis: AnalysisBlock = field(default_factory=AnalysisBlock)
    verify: VerifyBlock = field(default_factory=VerifyBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    # --- construction ------------------------------------------------------------
    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        _unknown("config", data, [f.name for f in fields(cls)])
        if "signal" not in data:
            raise ConfigError("config: missing required block 'signal'")
        blocks = {}
        for f, block_cls in (("model", ModelBlock), ("solver", SolverBlock),
                             ("analysis", AnalysisBlock), ("verify", VerifyBlock),
                             ("output", OutputBlock)):
            raw = data.get(f, {}) or {}
            if not isinstance(raw, dict):
                raise ConfigError(f"{f}: expected a mapping")
            _unknown(f, raw, [x.name for x in fields(block_cls)])
            blocks[f] = block_cls(**copy.deepcopy(raw))
        cfg = cls(signal=dict(data["signal"]), **blocks)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        self.build_model()
        self.build_signal()
        s = self.solver
        Ks = s.K if isinstance(s.K, list) else [s.K]
        if not Ks:
            raise ConfigError("solver.K: at least one gain is required")
        for k in Ks:
            _float("solver", "K", k, positive=True)
        _float("solver", "dt", s.dt, positive=True)
        _float("solver", "t_end", s.t_end, positive=True)
        _float("solver", "u0", s.u0)
        if isinstance(s.w0, str):
            if s.w0 != VIRGIN:
                raise ConfigError(f"solver.w0: expected 'virgin' or a list, got {s.w0!r}")
        elif len(s.w0) != len(self.model.elements):
            raise ConfigError(f"solver.w0: expected {len(self.model.elements)} memories")
        if s.record_stride is not None and int(s.record_stride) < 1:
            raise ConfigError("solver.record_stride: must be >= 1")
        a = self.analysis
        if a.rate_window is not None and (len(a.rate_window) != 2
                                          or not a.rate_window[0] < a.rate_window[1]):
            raise ConfigError("analysis.rate_window: expected [t_lo, t_hi] with t_lo < t_hi")
        for key in ("e_stop", "omega_limit_tol", "periodic_tol"):
            _float("analysis", key, getattr(a, key), positive=True)
        if a.sweep_dt is not None:
            _float("analysis", "sweep_dt", a.sweep_dt, positive=True)
        for w in a.sweep_omegas:
            _float("analysis", "sweep_omegas", w, positive=True)
        if int(a.max_iter) < 1 or int(a.sweep_max_periods) < 1:
            raise ConfigError("analysis: iteration caps must be >= 1")

    # --- derived objects -------------------------------------------------------
    def build_model(self) -> KPModel:
        return self.model.build()

    def build_signal(self) -> SignalSpec:
        try:
            return signal_from_dict(self.signal)
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"signal: {exc}") from None

    @property
    def gains(self) -> List[float]:
        K = self.solver.K
        return [float(k) for k in (K if isinstance(K, list) else [K])]

    def sim_config(self, K: float) -> SimConfig:
        s = self.solver
        return SimConfig(model=self.build_model(), signal=self.build_signal(), K=float(K),
                         dt=float(s.dt), t_end=float(s.t_end), u0=float(s.u0),
                         w0=s.w0 if isinstance(s.w0, str) else [float(v) for v in s.w0],
                         record_stride=None if s.record_stride is None else int(s.record_stride))

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=None)

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def resolve_path(path: Union[str, Path]) -> Path:
    """Existing path as given, else a shipped config of that name."""
    p = Path(path)
    if p.exists():
        return p
    shipped = SHIPPED_DIR / p.name
    if shipped.exists():
        return shipped
    raise ConfigError(f"config file not found: {path}")


def loads(text: str, overrides: Sequence[str] = ()) -> ExperimentConfig:
    try:
        data = _parse(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        problem = getattr(exc, "problem", None) or str(exc)
        ctx = getattr(exc, "context_mark", None)
        if ctx is not None and getattr(exc, "context", None):
            problem += f" ({exc.context} opened at line {ctx.line + 1})"
        raise ConfigError(f"malformed config{where}: {problem}") from None
    data = apply_overrides(data or {}, overrides)
    return ExperimentConfig.from_dict(data)


def load(path: Union[str, Path], overrides: Sequence[str] = ()) -> ExperimentConfig:
    return loads(resolve_path(path).read_text(), overrides)


def apply_overrides(data: dict, overrides: Sequence[str]) -> dict:
    """Apply ``a.b.c=value`` assignments.

    The key must exist in the file or be a known schema field; values are
    parsed as YAML scalars or flow collections.
    """
    data = copy.deepcopy(data)
    defaults = ExperimentConfig().to_dict()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node, schema = data, defaults
        for i, part in enumerate(parts):
            known = isinstance(schema, dict) and part in schema
            if not isinstance(node, dict) or (part not in node and not known):
                raise ConfigError(f"override {key!r}: no key {'.'.join(parts[:i + 1])!r}")
            schema = schema.get(part) if known else None
            if i < len(parts) - 1:
                node = node.setdefault(part, {})
        try:
            node[parts[-1]] = _parse(raw)
        except yaml.YAMLError:
            raise ConfigError(f"override {key!r}: cannot parse value {raw!r}") from None
    return data
