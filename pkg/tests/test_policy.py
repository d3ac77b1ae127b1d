import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robust_pension.exceptions import DegenerateError, SingularityError
from robust_pension.plan import BASELINE, FundState, target_benefit, target_contribution, with_params
from robust_pension.policy import (
    PRESETS,
    annuity_certain,
    closed_form_Q,
    closed_form_R,
    coeff_g,
    coeff_PQ,
    coeff_R,
    coefficients,
    counts,
    implied_spread,
    optimal_adjustments,
    optimal_investment,
    realized_policy,
    special_case_preset,
    value_function,
    worst_case_drift,
)
from robust_pension.special_cases import (
    ambiguity_neutral_policy,
    neutral_no_longevity_policy,
    no_longevity_policy,
    stationary_counts,
)

SHARPE = BASELINE.market.sharpe
times = st.floats(0.0, 20.0)
assets = st.floats(-1e5, 1e5)


def test_g3_robust_sharpe_term():
    _, _, g3 = coeff_g(BASELINE, 0.0)
    assert g3 == pytest.approx(SHARPE ** 2 / 3.0, rel=1e-15)
    assert g3 == pytest.approx(0.2667 ** 2 / 3.0, rel=1e-3)


def test_g3_ambiguity_neutral():
    _, _, g3 = coeff_g(with_params(BASELINE, k=0.0), 0.0)
    assert g3 == pytest.approx(-SHARPE ** 2, rel=1e-15)


@given(times)
@settings(max_examples=30, deadline=None)
def test_g1_positive(t):
    g1, _, _ = coeff_g(BASELINE, t)
    assert g1 > 0


def test_g2_zero_when_flows_vanish():
    _, g2, _ = coeff_g(BASELINE, 1.0, nc=0.0, nb=0.0)
    assert g2 == 0.0


def test_boundary_conditions():
    c = coefficients(BASELINE, BASELINE.rules.T)
    assert c.R == 1.0 and c.P == 1.0
    expected_Q = -BASELINE.rules.a0 * math.exp(BASELINE.market.r * BASELINE.rules.T)
    assert abs(c.Q - expected_Q) <= 1e-12 * abs(expected_Q)


def test_R_matches_unfactored_form():
    r, T, gamma3 = 0.01, 20.0, 2.0
    for t in np.linspace(0, 19, 9):
        g1, _, g3 = coeff_g(BASELINE, t)
        naive = math.exp(-(r + g3) * (T - t)) + (4 * g1 * gamma3 / (2 * r + g3)) * (
            math.exp(-r * t) - math.exp(-(2 * r + g3) * T + (r + g3) * t)
        )
        assert closed_form_R(t, T, r, g1, g3, gamma3) == pytest.approx(naive, rel=1e-9)


def test_R_without_discontinuity_weight():
    t, T, r, g3 = 4.0, 20.0, 0.01, 0.03
    assert closed_form_R(t, T, r, 123.0, g3, 0.0) == pytest.approx(math.exp(-(r + g3) * (T - t)), rel=1e-15)


def test_R_singular_rate():
    with pytest.raises(SingularityError):
        closed_form_R(1.0, 20.0, 0.01, 1.0, -0.02, 2.0)
    with pytest.raises(SingularityError):
        closed_form_Q(1.0, 20.0, 0.0, 1.0, 1.0)


def test_Q_without_net_flow():
    assert closed_form_Q(3.0, 20.0, 0.01, 0.0, 3000.0) == pytest.approx(-3000.0 * math.exp(0.03), rel=1e-15)


@given(times)
@settings(max_examples=40, deadline=None)
def test_annuity_identity(t):
    c = coefficients(BASELINE, t)
    direct = c.g2 * (1 - math.exp(-0.01 * (20.0 - t))) / 0.01 - 3000.0 * math.exp(0.01 * t)
    assert c.Q == pytest.approx(direct, rel=1e-12, abs=1e-9)
    assert c.Q == pytest.approx(c.g2 * annuity_certain(20.0 - t, 0.01) - 3000.0 * math.exp(0.01 * t), rel=1e-14)


def test_P_positive_on_horizon():
    t = np.linspace(0, 20, 101)
    assert np.all(coeff_R(BASELINE, t) > 0)
    P, _ = coeff_PQ(BASELINE, t)
    assert np.all(P > 0)


def test_vectorised_coefficients_match_scalar():
    t = np.array([0.0, 7.5, 20.0])
    P, Q = coeff_PQ(BASELINE, t)
    for i, ti in enumerate(t):
        c = coefficients(BASELINE, float(ti))
        assert P[i] == pytest.approx(c.P, rel=1e-15)
        assert Q[i] == pytest.approx(c.Q, rel=1e-15)


def test_worst_case_drift_forms():
    assert worst_case_drift(BASELINE) == pytest.approx(-0.0889, abs=5e-5)
    assert worst_case_drift(BASELINE, "foc-derived") == pytest.approx(-4 * SHARPE / 3, rel=1e-15)
    assert worst_case_drift(with_params(BASELINE, k=0.0)) == 0.0
    with pytest.raises(ValueError):
        worst_case_drift(BASELINE, "other")


@given(times, assets)
@settings(max_examples=60, deadline=None)
def test_sign_structure(t, a):
    s = FundState(t, a)
    c = coefficients(BASELINE, t)
    gap = a + c.Q
    pi = optimal_investment(BASELINE, s, c)
    lam1, lam2 = optimal_adjustments(BASELINE, s, c)
    for v in (pi, lam1, lam2):
        assert np.sign(v) == np.sign(gap)


@given(times, assets)
@settings(max_examples=40, deadline=None)
def test_feedback_linearity(t, a):
    c = coefficients(BASELINE, t)
    h = 1.0
    base = FundState(t, a)
    up = FundState(t, a + h)
    slope = (optimal_investment(BASELINE, up, c) - optimal_investment(BASELINE, base, c)) / h
    assert slope == pytest.approx(SHARPE / (3 * BASELINE.market.sigma), rel=1e-10)
    lam_up, lam_base = optimal_adjustments(BASELINE, up, c), optimal_adjustments(BASELINE, base, c)
    assert (lam_up[0] - lam_base[0]) / h == pytest.approx(c.nc * c.P, rel=1e-7)
    assert (lam_up[1] - lam_base[1]) / h == pytest.approx(c.nb * c.P, rel=1e-7)


def test_controls_vanish_when_assets_meet_aspiration():
    c = coefficients(BASELINE, 10.0)
    s = FundState(10.0, -c.Q)
    assert optimal_investment(BASELINE, s, c) == 0.0
    assert optimal_adjustments(BASELINE, s, c) == (0.0, 0.0)
    assert value_function(BASELINE, s, c) == 0.0
    d = realized_policy(BASELINE, s)
    assert d.c_star == pytest.approx(float(target_contribution(BASELINE.rules, 10.0)), rel=1e-15)
    assert d.b_star == pytest.approx(float(target_benefit(BASELINE.rules, 10.0)), rel=1e-15)


def test_adjustment_ratio_equal_weights():
    c = coefficients(BASELINE, 10.0)
    lam1, lam2 = optimal_adjustments(BASELINE, FundState(10.0, 3000.0), c)
    assert lam1 / lam2 == pytest.approx(c.nc / c.nb, rel=1e-13)


def test_total_adjustment_spreading_form():
    c = coefficients(BASELINE, 10.0)
    a = 2800.0
    lam1, _ = optimal_adjustments(BASELINE, FundState(10.0, a), c)
    assert c.nc * lam1 == pytest.approx(c.nc ** 2 * c.P * (a + c.Q), rel=1e-13)


def test_value_function_positive_and_linear_in_gamma3():
    s = FundState(0.0, 3000.0)
    c = coefficients(BASELINE, 0.0)
    V = value_function(BASELINE, s, c)
    assert V > 0 and math.isfinite(V)
    assert value_function(with_params(BASELINE, gamma3=4.0), s, c) == pytest.approx(2 * V, rel=1e-15)


def test_implied_spread_relations():
    L = 1000.0
    s = FundState(8.0, 3000.0)
    c = coefficients(BASELINE, 8.0)
    alpha, beta = implied_spread(BASELINE, s, L, c)
    assert alpha * 2.0 / c.nc ** 2 == pytest.approx(beta * 2.0 / c.nb ** 2, rel=1e-13)
    zero = FundState(8.0, -c.Q)
    assert implied_spread(BASELINE, zero, L, c) == (0.0, 0.0)
    with pytest.raises(DegenerateError):
        implied_spread(BASELINE, FundState(8.0, L), L, c)


def test_realized_policy_surplus_above_aspiration():
    c = coefficients(BASELINE, 5.0)
    d = realized_policy(BASELINE, FundState(5.0, -c.Q + 1000.0))
    assert d.c_star < float(target_contribution(BASELINE.rules, 5.0))
    assert d.b_star > float(target_benefit(BASELINE.rules, 5.0))
    assert math.isnan(d.alpha_implied)
    assert set(d.to_dict()) >= {"phi_star", "pi_star", "lambda1_star", "lambda2_star", "c_star", "b_star"}


def test_rebate_flag():
    d = realized_policy(BASELINE, FundState(1.0, 1e6))
    assert d.rebate and d.c_star < 0


def test_presets():
    assert special_case_preset(BASELINE, "no-ambiguity").weights.k == 0.0
    nl = special_case_preset(BASELINE, "no-longevity")
    assert not nl.population.mortality.trend and nl.population.frontier.xi == 0.0
    both = special_case_preset(BASELINE, "neither")
    assert both == special_case_preset(special_case_preset(BASELINE, "no-longevity"), "no-ambiguity")
    with pytest.raises(ValueError):
        special_case_preset(BASELINE, "bogus")


def test_stationary_counts_match_general_code_without_trend():
    cfg = special_case_preset(BASELINE, "no-longevity")
    for t in (0.0, 6.0, 17.0):
        assert stationary_counts(BASELINE, t) == counts(cfg, t)


SPECIAL = {
    "no-ambiguity": ambiguity_neutral_policy,
    "no-longevity": no_longevity_policy,
    "neither": neutral_no_longevity_policy,
}


@pytest.mark.parametrize("preset", PRESETS)
@given(t=times, a=assets)
@settings(max_examples=40, deadline=None)
def test_special_cases_bit_identical(preset, t, a):
    cfg = special_case_preset(BASELINE, preset)
    s = FundState(t, a)
    c = coefficients(cfg, t)
    ref = SPECIAL[preset](BASELINE, t, a)
    lam1, lam2 = optimal_adjustments(cfg, s, c)
    assert worst_case_drift(cfg) == ref["phi_star"]
    assert optimal_investment(cfg, s, c) == ref["pi_star"]
    assert (lam1, lam2) == (ref["lambda1_star"], ref["lambda2_star"])
    assert value_function(cfg, s, c) == ref["value"]
