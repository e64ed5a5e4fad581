"""scikit-learn style wrappers around the hysteresis model and the compensator."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .kp_model import DEFAULT_ELEMENTS, VIRGIN, KPModel
from .signals import Table
from .simulator import SimConfig, simulate


def _as_column(X, name: str) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=float, input_name=name)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"{name} must have a single column, got {X.shape[1]}")
        X = X[:, 0]
    return X


class KPHysteresis(TransformerMixin, BaseEstimator):
    """Maps an input sequence ``u`` to the model output ``H(u)``.

    Each call to :meth:`transform` starts from the configured initial
    memories, so the output depends only on the sequence passed in.
    """

    def __init__(self, elements=DEFAULT_ELEMENTS, offset=0.0, w0=VIRGIN):
        self.elements = elements
        self.offset = offset
        self.w0 = w0

    def fit(self, X=None, y=None):
        self.model_ = KPModel.from_params(tuple(tuple(e) for e in self.elements),
                                          float(self.offset))
        if not isinstance(self.w0, str):
            w0 = np.asarray(self.w0, dtype=float)
            if w0.shape != (len(self.model_.elements),):
                raise ValueError(f"w0 needs {len(self.model_.elements)} memories")
        elif self.w0 != VIRGIN:
            raise ValueError(f"w0 must be {VIRGIN!r} or a list of memories")
        self.output_range_ = self.model_.output_range()
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        u = _as_column(X, "X")
        model = self.model_.clone()
        first = model.h_init(float(u[0]), self.w0 if isinstance(self.w0, str)
                             else [float(v) for v in self.w0])
        out = [first] + model.process(u[1:].tolist())
        return np.asarray(out, dtype=float).reshape(-1, 1)


class FeedforwardCompensator(BaseEstimator):
    """Integrates ``(1/K) du/dt = r - H(u)`` for a sampled reference.

    ``X`` holds rows ``(t, r)`` with increasing t starting at 0; the reference
    is interpolated linearly between samples. :meth:`predict` returns ``u`` at
    the sample times and :meth:`score` the negated max tracking error.
    """

    def __init__(self, K=10.0, dt=1e-6, elements=DEFAULT_ELEMENTS, offset=0.0, u0=0.0,
                 w0=VIRGIN):
        self.K = K
        self.dt = dt
        self.elements = elements
        self.offset = offset
        self.u0 = u0
        self.w0 = w0

    def _reference(self, X):
        X = check_array(X, dtype=float, input_name="X")
        if X.shape[1] != 2:
            raise ValueError(f"X must have columns (t, r), got {X.shape[1]} columns")
        if X[0, 0] != 0.0:
            raise ValueError("reference samples must start at t = 0")
        return X, Table(tuple(map(tuple, X)))

    def _run(self, X):
        X, ref = self._reference(X)
        cfg = SimConfig(self.model_, ref, K=float(self.K), dt=float(self.dt),
                        t_end=max(float(X[-1, 0]), float(self.dt)), u0=float(self.u0),
                        w0=self.w0)
        return X, simulate(cfg)

    def fit(self, X, y=None):
        self.model_ = KPModel.from_params(tuple(tuple(e) for e in self.elements),
                                          float(self.offset))
        _, self.trace_ = self._run(X)
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X, trace = self._run(X)
        return np.interp(X[:, 0], trace.t, trace.u)

    def score(self, X, y=None):
        check_is_fitted(self, "model_")
        return -float(self._run(X)[1].meta["max_abs_e"])
