"""Scikit-learn style front end for the closed-form robust policy.

``fit`` resolves and validates the plan configuration and computes the
time-invariant quantities (target liability, Sharpe ratio, worst-case drift).
``predict`` and ``transform`` then evaluate the feedback policy on rows of
``X = [t, a]``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DomainError
from .plan import (
    PARAMETER_NAMES,
    PlanConfig,
    flat_params,
    target_benefit,
    target_contribution,
    target_liability,
    with_params,
)
from .policy import coeff_PQ, counts, investment_coefficient, worst_case_drift
from .simulation import SimulationSpec, simulate_paths, summarize

DECISION_COLUMNS = ("pi_star", "lambda1_star", "lambda2_star", "c_star", "b_star", "value")

_DEFAULTS = flat_params(PlanConfig())


class RobustPensionPolicy(TransformerMixin, BaseEstimator):
    """Optimal investment and risk-sharing rule for a collective hybrid plan.

    Every constructor argument is a flat plan parameter; the defaults are the
    baseline calibration.  ``X`` always has two columns, time ``t`` in years
    and fund assets ``a``.
    """

    def __init__(
        self, A=_DEFAULTS["A"], B=_DEFAULTS["B"], theta=_DEFAULTS["theta"], omega=_DEFAULTS["omega"],
        longevity_trend=True, m0=_DEFAULTS["m0"], xi=_DEFAULTS["xi"], n0=_DEFAULTS["n0"],
        kappa=_DEFAULTS["kappa"], x0=_DEFAULTS["x0"], xr=_DEFAULTS["xr"],
        survival_form="as-printed", r=_DEFAULTS["r"], mu=_DEFAULTS["mu"], sigma=_DEFAULTS["sigma"],
        c=_DEFAULTS["c"], b=_DEFAULTS["b"], tau=_DEFAULTS["tau"], a0=_DEFAULTS["a0"], T=_DEFAULTS["T"],
        gamma1=_DEFAULTS["gamma1"], gamma2=_DEFAULTS["gamma2"], gamma3=_DEFAULTS["gamma3"],
        k=_DEFAULTS["k"], liability_discount="as-printed", phi_star_form="as-printed",
        age_step=_DEFAULTS["age_step"], time_steps=_DEFAULTS["time_steps"],
    ):
        self.A = A
        self.B = B
        self.theta = theta
        self.omega = omega
        self.longevity_trend = longevity_trend
        self.m0 = m0
        self.xi = xi
        self.n0 = n0
        self.kappa = kappa
        self.x0 = x0
        self.xr = xr
        self.survival_form = survival_form
        self.r = r
        self.mu = mu
        self.sigma = sigma
        self.c = c
        self.b = b
        self.tau = tau
        self.a0 = a0
        self.T = T
        self.gamma1 = gamma1
        self.gamma2 = gamma2
        self.gamma3 = gamma3
        self.k = k
        self.liability_discount = liability_discount
        self.phi_star_form = phi_star_form
        self.age_step = age_step
        self.time_steps = time_steps

    @classmethod
    def from_config(cls, config):
        return cls(**flat_params(config))

    def _build_config(self):
        params = {name: getattr(self, name) for name in PARAMETER_NAMES}
        return with_params(PlanConfig(), **params)

    def fit(self, X=None, y=None):
        """Validate the parameters and precompute the time-invariant quantities.

        ``X`` and ``y`` are ignored; the policy is a closed form, not learned.
        """
        self.config_ = self._build_config()
        self.liability_ = target_liability(self.config_)
        self.sharpe_ = self.config_.market.sharpe
        self.phi_star_ = worst_case_drift(self.config_)
        self.investment_coefficient_ = investment_coefficient(self.config_)
        self.n_features_in_ = 2
        return self

    def _check_X(self, X):
        check_is_fitted(self, "config_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 2:
            raise ValueError(f"X must have two columns (t, a), got {X.shape[1]}")
        t = X[:, 0]
        if np.any(t < 0) or np.any(t > self.config_.rules.T):
            raise DomainError(f"t must lie in [0, {self.config_.rules.T}]")
        return t, X[:, 1]

    def _decisions(self, X):
        t, a = self._check_X(X)
        cfg = self.config_
        w = cfg.weights
        nc, nb = counts(cfg, t)
        P, Q = coeff_PQ(cfg, t, nc, nb)
        gap = a + Q
        lam1 = (w.gamma3 / w.gamma1) * nc * P * gap
        lam2 = (w.gamma3 / w.gamma2) * nb * P * gap
        return {
            "pi_star": self.investment_coefficient_ * gap,
            "lambda1_star": lam1,
            "lambda2_star": lam2,
            "c_star": target_contribution(cfg.rules, t) - lam1,
            "b_star": target_benefit(cfg.rules, t) + lam2,
            "value": w.gamma3 * np.exp(-cfg.market.r * t) * P * gap ** 2,
        }

    def predict(self, X):
        """Optimal risky holding ``pi*`` at each ``(t, a)`` row."""
        return self._decisions(X)["pi_star"]

    def transform(self, X):
        """Columns ``DECISION_COLUMNS`` at each ``(t, a)`` row."""
        d = self._decisions(X)
        return np.column_stack([d[name] for name in DECISION_COLUMNS])

    def get_feature_names_out(self, input_features=None):
        return np.asarray(DECISION_COLUMNS, dtype=object)

    def simulate(self, spec=None, summary=True):
        """Monte Carlo run of the fitted policy; returns a summary or the raw paths."""
        check_is_fitted(self, "config_")
        paths = simulate_paths(self.config_, spec or SimulationSpec(), liability=self.liability_)
        return summarize(paths) if summary else paths
