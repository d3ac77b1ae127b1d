"""Closed-form robust policy for the collective hybrid plan.

The value function is ``V(t, a) = gamma3 * exp(-r t) * P(t) * (a + Q(t))**2``
and every control is a multiple of the shortfall ``a + Q(t)``.  The coefficient
functions ``g1, g2`` depend on time through the cohort counts; ``R, P, Q`` are
evaluated with ``g1, g2`` frozen at the evaluation time.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .demography import active_count, retired_count
from .exceptions import DegenerateError, SingularityError
from .plan import target_benefit, target_contribution, with_params


@dataclass(frozen=True)
class PolicyCoefficients:
    t: float
    nc: float
    nb: float
    g1: float
    g2: float
    g3: float
    R: float
    P: float
    Q: float


@dataclass(frozen=True)
class ControlDecision:
    t: float
    a: float
    phi_star: float
    pi_star: float
    lambda1_star: float
    lambda2_star: float
    c_star: float
    b_star: float
    alpha_implied: float
    beta_implied: float
    rebate: bool

    def to_dict(self):
        return asdict(self)


def _ambiguity_factor(config):
    d = 2.0 * config.weights.k - 1.0
    if abs(d) < 1e-12:
        raise SingularityError("2k - 1 = 0: robust policy undefined at k = 0.5")
    return d


def counts(config, t):
    """``(NC(t), NB(t))`` at the configured age step."""
    pop = config.population
    return active_count(pop, t, config.age_step), retired_count(pop, t, config.age_step)


def coeff_g(config, t, nc=None, nb=None):
    """``(g1, g2, g3)`` at time ``t``; works elementwise on arrays of ``t``."""
    if nc is None or nb is None:
        nc, nb = counts(config, t)
    w, rules, r = config.weights, config.rules, config.market.r
    discount = np.exp(-r * np.asarray(t, dtype=float))
    g1 = nc ** 2 / (4.0 * w.gamma1 * discount) + nb ** 2 / (4.0 * w.gamma2 * discount)
    g2 = nc * rules.c * np.exp(rules.tau * np.asarray(t, dtype=float)) - nb * rules.b * np.exp(
        rules.tau * np.asarray(t, dtype=float)
    )
    g3 = config.market.sharpe ** 2 / _ambiguity_factor(config)
    return g1, g2, g3


def closed_form_R(t, T, r, g1, g3, gamma3):
    """``R(t)``; ``1 / R`` is the Riccati coefficient ``P``."""
    gamma = 2.0 * r + g3
    if abs(gamma) < 1e-12:
        raise SingularityError("2r + g3 = 0: R(t) is undefined")
    # exp(-rt) - exp(-gamma T + (r + g3) t), factored so that R(T) = 1 exactly
    return np.exp(-(r + g3) * (T - t)) + (4.0 * g1 * gamma3 / gamma) * (
        np.exp(-r * t) * -np.expm1(-gamma * (T - t))
    )


def closed_form_Q(t, T, r, g2, a0):
    if abs(r) < 1e-12:
        raise SingularityError("r = 0: Q(t) annuity form needs r != 0")
    return (g2 / r) * -np.expm1(-r * (T - t)) - a0 * np.exp(r * t)


def annuity_certain(n, rate):
    """Present value of 1 per year paid continuously for ``n`` years."""
    return -np.expm1(-rate * n) / rate


def coeff_R(config, t, nc=None, nb=None):
    g1, _, g3 = coeff_g(config, t, nc, nb)
    m, rules = config.market, config.rules
    return closed_form_R(np.asarray(t, dtype=float), rules.T, m.r, g1, g3, config.weights.gamma3)


def coeff_PQ(config, t, nc=None, nb=None):
    g1, g2, g3 = coeff_g(config, t, nc, nb)
    m, rules = config.market, config.rules
    t = np.asarray(t, dtype=float)
    R = closed_form_R(t, rules.T, m.r, g1, g3, config.weights.gamma3)
    return 1.0 / R, closed_form_Q(t, rules.T, m.r, g2, rules.a0)


def coefficients(config, t, nc=None, nb=None):
    """All coefficient functions at a scalar time ``t``."""
    if nc is None or nb is None:
        nc, nb = counts(config, t)
    g1, g2, g3 = coeff_g(config, t, nc, nb)
    m, rules = config.market, config.rules
    R = closed_form_R(t, rules.T, m.r, g1, g3, config.weights.gamma3)
    Q = closed_form_Q(t, rules.T, m.r, g2, rules.a0)
    return PolicyCoefficients(
        t=float(t), nc=float(nc), nb=float(nb), g1=float(g1), g2=float(g2), g3=float(g3),
        R=float(R), P=float(1.0 / R), Q=float(Q),
    )


def worst_case_drift(config, form=None):
    """Adversarial drift distortion ``phi*``.

    ``as-printed`` is ``-k phi / (2 (2k - 1))``; ``foc-derived`` substitutes the
    optimal investment into ``phi* = -k sigma pi V_a / V``, which gives
    ``-2 k phi / (2k - 1)``.
    """
    form = config.phi_star_form if form is None else form
    k = config.weights.k
    d = _ambiguity_factor(config)
    sharpe = config.market.sharpe
    if form == "as-printed":
        return -k * sharpe / (2.0 * d)
    if form == "foc-derived":
        return -2.0 * k * sharpe / d
    raise ValueError(f"unknown phi* form {form!r}")


def investment_coefficient(config):
    """Risky amount per unit of shortfall ``a + Q(t)``."""
    return config.market.sharpe / (_ambiguity_factor(config) * config.market.sigma)


def optimal_investment(config, state, coeffs=None):
    coeffs = coefficients(config, state.t) if coeffs is None else coeffs
    return investment_coefficient(config) * (state.a + coeffs.Q)


def optimal_adjustments(config, state, coeffs=None):
    coeffs = coefficients(config, state.t) if coeffs is None else coeffs
    w = config.weights
    gap = state.a + coeffs.Q
    lam1 = (w.gamma3 / w.gamma1) * coeffs.nc * coeffs.P * gap
    lam2 = (w.gamma3 / w.gamma2) * coeffs.nb * coeffs.P * gap
    return lam1, lam2


def implied_spread(config, state, L, coeffs=None, tol=1e-9):
    """Spread parameters ``(alpha, beta)`` implied by the optimal adjustments.

    Raises :class:`DegenerateError` when the surplus is (numerically) zero.
    """
    coeffs = coefficients(config, state.t) if coeffs is None else coeffs
    sp = state.a - L
    if abs(sp) <= tol * max(1.0, abs(L)):
        raise DegenerateError("surplus is zero: spread parameters undefined")
    lam1, lam2 = optimal_adjustments(config, state, coeffs)
    return lam1 * coeffs.nc / sp, lam2 * coeffs.nb / sp


def value_function(config, state, coeffs=None):
    coeffs = coefficients(config, state.t) if coeffs is None else coeffs
    r = config.market.r
    return config.weights.gamma3 * math.exp(-r * state.t) * coeffs.P * (state.a + coeffs.Q) ** 2


def realized_policy(config, state, L=None, coeffs=None):
    """Bundle every optimal control at ``state`` into a :class:`ControlDecision`.

    ``L`` is only needed for the implied spread parameters; they are ``nan``
    when it is omitted or the surplus vanishes.
    """
    coeffs = coefficients(config, state.t) if coeffs is None else coeffs
    pi = optimal_investment(config, state, coeffs)
    lam1, lam2 = optimal_adjustments(config, state, coeffs)
    c_star = float(target_contribution(config.rules, state.t)) - lam1
    b_star = float(target_benefit(config.rules, state.t)) + lam2
    alpha = beta = math.nan
    if L is not None:
        try:
            alpha, beta = implied_spread(config, state, L, coeffs)
        except DegenerateError:
            pass
    return ControlDecision(
        t=float(state.t), a=float(state.a), phi_star=worst_case_drift(config),
        pi_star=float(pi), lambda1_star=float(lam1), lambda2_star=float(lam2),
        c_star=c_star, b_star=b_star, alpha_implied=float(alpha), beta_implied=float(beta),
        rebate=bool(c_star < 0 or b_star < 0),
    )


PRESETS = ("no-ambiguity", "no-longevity", "neither")


def special_case_preset(config, which):
    """Config for one of the three special cases.

    ``no-ambiguity`` sets ``k = 0``; ``no-longevity`` removes the longevity
    drift and freezes the frontier at ``m0``; ``neither`` does both.
    """
    if which == "no-ambiguity":
        return with_params(config, k=0.0)
    if which == "no-longevity":
        return with_params(config, longevity_trend=False, xi=0.0)
    if which == "neither":
        return with_params(config, k=0.0, longevity_trend=False, xi=0.0)
    raise ValueError(f"unknown preset {which!r}; expected one of {PRESETS}")
