import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from robust_pension.estimator import DECISION_COLUMNS, RobustPensionPolicy
from robust_pension.exceptions import DomainError, InvalidParameterError, SingularityError
from robust_pension.plan import PARAMETER_NAMES, BASELINE, FundState, with_params
from robust_pension.policy import realized_policy, value_function
from robust_pension.simulation import SimulationSpec

X = np.array([[0.0, 3000.0], [10.0, 2500.0], [19.5, 4000.0]])


def test_params_cover_every_plan_parameter():
    est = RobustPensionPolicy()
    assert set(est.get_params()) == set(PARAMETER_NAMES)
    est.set_params(kappa=-0.01)
    assert clone(est).kappa == -0.01


def test_fit_builds_baseline():
    est = RobustPensionPolicy().fit()
    assert est.config_ == BASELINE
    assert est.sharpe_ == pytest.approx(0.26667, abs=5e-5)
    assert est.phi_star_ == pytest.approx(-0.0889, abs=5e-5)
    assert est.liability_ > 0


def test_from_config_round_trip():
    cfg = with_params(BASELINE, xr=70.0, k=0.0)
    assert RobustPensionPolicy.from_config(cfg).fit().config_ == cfg


def test_predict_and_transform_match_policy():
    est = RobustPensionPolicy().fit()
    pi = est.predict(X)
    out = est.transform(X)
    assert out.shape == (3, len(DECISION_COLUMNS))
    for row, (t, a) in zip(out, X):
        d = realized_policy(BASELINE, FundState(t, a))
        assert row[0] == pytest.approx(d.pi_star, rel=1e-12)
        assert row[3] == pytest.approx(d.c_star, rel=1e-12)
        assert row[4] == pytest.approx(d.b_star, rel=1e-12)
        assert row[5] == pytest.approx(value_function(BASELINE, FundState(t, a)), rel=1e-12)
    assert np.array_equal(pi, out[:, 0])
    assert list(est.get_feature_names_out()) == list(DECISION_COLUMNS)


def test_fit_transform():
    out = RobustPensionPolicy().fit_transform(X)
    assert out.shape == (3, 6)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        RobustPensionPolicy().predict(X)


def test_input_validation():
    est = RobustPensionPolicy().fit()
    with pytest.raises(ValueError):
        est.predict(np.ones((2, 3)))
    with pytest.raises(ValueError):
        est.predict([[np.nan, 1.0]])
    with pytest.raises(DomainError):
        est.predict([[25.0, 1.0]])


def test_invalid_parameters_surface_at_fit():
    with pytest.raises(InvalidParameterError):
        RobustPensionPolicy(mu=0.005).fit()
    with pytest.raises(SingularityError):
        RobustPensionPolicy(k=0.5).fit()


def test_simulate_helper():
    est = RobustPensionPolicy().fit()
    summary = est.simulate(SimulationSpec(steps=20, paths=10))
    assert summary.n_valid == 10
    paths = est.simulate(SimulationSpec(steps=20, paths=10), summary=False)
    assert paths.liability == est.liability_
