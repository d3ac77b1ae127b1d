"""Stand-alone formulas for the three special cases of the robust policy.

These are written out separately from :mod:`robust_pension.policy` so that the
general code, evaluated on a preset config, can be compared against them:

* ambiguity-neutral (``k = 0``): ``g3 = -phi**2`` and ``pi* = -(phi / sigma)(a + Q)``;
* no longevity trend: time-free survival ``p(x)`` and retirees up to ``m0``;
* both at once.
"""

import math

import numpy as np

from .demography import cohort_integral


def stationary_survival(pop, x):
    """Survival to age ``x`` without a longevity drift."""
    m = pop.mortality
    ln_theta = math.log(m.theta)
    if pop.survival_form == "as-printed":
        makeham = (m.B / ln_theta) * (m.theta ** x - m.theta ** pop.x0)
    else:
        makeham = (m.B / (1.0 * ln_theta)) * (m.theta ** x - m.theta ** pop.x0)
    return np.exp(-m.A * (x - pop.x0) - makeham)


def stationary_counts(config, t):
    """``(NC, NB)`` with the time-free survival and the fixed maximum age ``m0``."""
    pop = config.population
    p = lambda x, tt: stationary_survival(pop, x)
    t1 = np.atleast_1d(np.asarray(t, dtype=float))
    nc = cohort_integral(pop, t1, pop.x0, pop.xr, config.age_step, p)
    nb = cohort_integral(pop, t1, pop.xr, np.full(t1.shape, pop.frontier.m0), config.age_step, p)
    if np.ndim(t) == 0:
        return float(nc[0]), float(nb[0])
    return nc, nb


def _coefficients(config, t, nc, nb, g3):
    w, rules, r, T = config.weights, config.rules, config.market.r, config.rules.T
    discount = np.exp(-r * t)
    g1 = nc ** 2 / (4.0 * w.gamma1 * discount) + nb ** 2 / (4.0 * w.gamma2 * discount)
    g2 = nc * rules.c * np.exp(rules.tau * t) - nb * rules.b * np.exp(rules.tau * t)
    gamma = 2.0 * r + g3
    R = np.exp(-(r + g3) * (T - t)) + (4.0 * g1 * w.gamma3 / gamma) * (
        np.exp(-r * t) * -np.expm1(-gamma * (T - t))
    )
    Q = (g2 / r) * -np.expm1(-r * (T - t)) - rules.a0 * np.exp(r * t)
    return 1.0 / R, Q


def _controls(config, t, a, nc, nb, g3, pi_coef, phi_star):
    w, r = config.weights, config.market.r
    P, Q = _coefficients(config, t, nc, nb, g3)
    gap = a + Q
    return {
        "phi_star": phi_star,
        "pi_star": pi_coef * gap,
        "lambda1_star": (w.gamma3 / w.gamma1) * nc * P * gap,
        "lambda2_star": (w.gamma3 / w.gamma2) * nb * P * gap,
        "value": w.gamma3 * math.exp(-r * t) * P * gap ** 2,
        "P": P,
        "Q": Q,
    }


def _general_counts(config, t):
    from .demography import active_count, retired_count

    pop = config.population
    return active_count(pop, t, config.age_step), retired_count(pop, t, config.age_step)


def ambiguity_neutral_policy(config, t, a):
    """Controls with no ambiguity aversion, on the configured demography."""
    sharpe, sigma = config.market.sharpe, config.market.sigma
    nc, nb = _general_counts(config, t)
    return _controls(config, t, a, nc, nb, -(sharpe ** 2), -(sharpe / sigma), 0.0)


def no_longevity_policy(config, t, a):
    """Robust controls without a longevity trend, for the ``k`` in ``config``."""
    sharpe, sigma, k = config.market.sharpe, config.market.sigma, config.weights.k
    nc, nb = stationary_counts(config, t)
    d = 2.0 * k - 1.0
    return _controls(config, t, a, nc, nb, sharpe ** 2 / d, sharpe / (d * sigma), -k * sharpe / (2.0 * d))


def neutral_no_longevity_policy(config, t, a):
    """Neither ambiguity aversion nor a longevity trend."""
    sharpe, sigma = config.market.sharpe, config.market.sigma
    nc, nb = stationary_counts(config, t)
    return _controls(config, t, a, nc, nb, -(sharpe ** 2), -(sharpe / sigma), 0.0)
