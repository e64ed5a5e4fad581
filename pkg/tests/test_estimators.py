import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from kpcomp.estimators import FeedforwardCompensator, KPHysteresis
from kpcomp.kp_model import KPModel


def test_hysteresis_transform_matches_model():
    u = np.concatenate([np.linspace(0, 3, 31), np.linspace(3, -1, 41)])
    est = KPHysteresis().fit()
    out = est.transform(u.reshape(-1, 1))
    m = KPModel.default()
    m.h_init(u[0])
    np.testing.assert_array_equal(out[:, 0], [m.output] + m.process(u[1:].tolist()))
    np.testing.assert_array_equal(est.transform(u), out)
    assert est.output_range_ == (0.0, 4.0)


def test_hysteresis_params_and_clone():
    est = KPHysteresis(offset=0.5)
    assert est.get_params()["offset"] == 0.5
    c = clone(est).set_params(offset=1.0)
    assert c.fit().output_range_ == (1.0, 5.0)


def test_hysteresis_validation():
    with pytest.raises(NotFittedError):
        KPHysteresis().transform([0.0])
    with pytest.raises(ValueError):
        KPHysteresis().fit().transform(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        KPHysteresis().fit().transform([0.0, np.nan])
    with pytest.raises(ValueError):
        KPHysteresis(w0=[0.0]).fit()
    with pytest.raises(ValueError):
        KPHysteresis(w0="fresh").fit()
    with pytest.raises(ValueError):
        KPHysteresis().fit().transform(np.zeros(0))


def test_compensator_tracks_reference():
    t = np.linspace(0, 1, 11)
    X = np.column_stack([t, np.full_like(t, 2.0)])
    est = FeedforwardCompensator(K=50, dt=1e-4).fit(X)
    u = est.predict(X)
    assert u.shape == (11,)
    assert u[-1] == pytest.approx(17 / 12, abs=1e-6)
    assert -2.0 <= est.score(X) < 0


def test_compensator_validation():
    with pytest.raises(ValueError):
        FeedforwardCompensator().fit(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        FeedforwardCompensator().fit(np.array([[0.5, 1.0], [1.0, 1.0]]))
    with pytest.raises(NotFittedError):
        FeedforwardCompensator().predict(np.array([[0.0, 1.0], [1.0, 1.0]]))


def test_compensator_accepts_lists():
    est = FeedforwardCompensator(K=10, dt=1e-3).fit([[0.0, 1.0], [0.5, 1.0]])
    assert est.trace_.t[-1] == pytest.approx(0.5)
