import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robust_pension.demography import (
    AgeFrontier,
    EntryProcess,
    MortalityModel,
    PopulationStructure,
    _log_survival,
    active_count,
    dependency_ratio,
    hazard,
    life_table,
    retired_count,
    survival,
)
from robust_pension.exceptions import DegenerateError, DomainError, InvalidParameterError
from robust_pension.special_cases import stationary_survival

POP = PopulationStructure()


def pop_with(**kw):
    mort = {k: kw.pop(k) for k in ("A", "B", "theta", "omega", "trend") if k in kw}
    front = {k: kw.pop(k) for k in ("m0", "xi") if k in kw}
    entry = {k: kw.pop(k) for k in ("n0", "kappa") if k in kw}
    return PopulationStructure(
        mortality=MortalityModel(**mort), frontier=AgeFrontier(**front), entry=EntryProcess(**entry), **kw
    )


def test_hazard_matches_high_precision_value():
    mpmath.mp.dps = 40
    expected = mpmath.mpf("0.000022") + mpmath.mpf("2.7e-6") * mpmath.mpf("1.124") ** 25
    assert hazard(MortalityModel(), 25.0, 0.0) == pytest.approx(float(expected), rel=1e-14)


def test_hazard_without_makeham_term_is_constant():
    m = MortalityModel(B=0.0)
    assert np.all(hazard(m, np.array([25.0, 60.0, 99.0]), 7.0) == m.A)


def test_hazard_at_time_omega_shifts_age_by_one_year():
    m = MortalityModel()
    x = 50.0
    assert hazard(m, x + m.omega, m.omega) == pytest.approx(m.A + m.B * m.theta ** (x + m.omega - 1), rel=1e-14)


@pytest.mark.parametrize("kw", [{"theta": 1.0}, {"B": -1e-6}, {"A": -1e-6}, {"omega": 0.0}])
def test_invalid_mortality_parameters(kw):
    with pytest.raises(InvalidParameterError):
        MortalityModel(**kw)


def test_hazard_rejects_negative_age():
    with pytest.raises(DomainError):
        hazard(MortalityModel(), -1.0, 0.0)


def test_hazard_monotone_in_age_and_time():
    m = MortalityModel()
    ages = np.linspace(25, 100, 200)
    assert np.all(np.diff(hazard(m, ages, 5.0)) > 0)
    assert hazard(m, 60.0, 1.0) > hazard(m, 60.0, 2.0)


def test_survival_boundary_and_truncation():
    for t in np.linspace(0, 20, 11):
        assert survival(POP, POP.x0, t) == 1.0
        assert survival(POP, float(POP.frontier.max_age(t)), t) == 0.0


def test_survival_table_values():
    p65, p40 = survival(POP, 65.0, 0.0), survival(POP, 40.0, 0.0)
    assert 0.0 < p65 < 1.0
    assert p65 < p40


def test_survival_rejects_age_below_entry():
    with pytest.raises(DomainError):
        survival(POP, 20.0, 0.0)


@given(st.floats(0.0, 20.0))
@settings(max_examples=40, deadline=None)
def test_survival_non_increasing_in_age(t):
    ages = np.arange(POP.x0, float(POP.frontier.max_age(t)) + 1.0, 0.1)
    p = survival(POP, ages, t)
    assert np.all(np.diff(p) <= 0.0)
    assert np.all((p >= 0) & (p <= 1))


def _diagonal_hazard(pop, x, t, h=1e-4):
    # d/du ln p(x + u, t + u): follow one cohort through time
    up = _log_survival(pop, x + h, t + h)
    down = _log_survival(pop, x - h, t - h)
    return -(up - down) / (2 * h)


@pytest.mark.parametrize("x,t", [(30.0, 2.0), (50.0, 10.0), (70.0, 5.0), (95.0, 15.0)])
def test_path_integral_survival_recovers_hazard(x, t):
    pop = pop_with(survival_form="path-integral")
    assert _diagonal_hazard(pop, x, t) == pytest.approx(hazard(pop.mortality, x, t), rel=1e-6)


@pytest.mark.parametrize("x,t", [(50.0, 10.0), (80.0, 5.0)])
def test_printed_survival_scales_makeham_term_by_one_minus_inverse_omega(x, t):
    # the printed closed form differentiates to A + (1 - 1/omega) B theta^(x - t/omega)
    m = POP.mortality
    expected = m.A + (1.0 - 1.0 / m.omega) * m.B * m.theta ** (x - t / m.omega)
    assert _diagonal_hazard(POP, x, t) == pytest.approx(expected, rel=1e-6)
    assert abs(_diagonal_hazard(POP, x, t) - hazard(m, x, t)) > 1e-3 * hazard(m, x, t)


def test_no_trend_survival_is_stationary():
    pop = pop_with(trend=False, xi=0.0)
    ages = np.linspace(25, 99, 50)
    p0 = survival(pop, ages, 0.0)
    for t in (3.0, 11.0, 20.0):
        assert np.array_equal(survival(pop, ages, t), p0)
    assert np.allclose(p0, stationary_survival(pop, ages), rtol=1e-14, atol=0)


def test_active_count_without_mortality_or_growth():
    pop = pop_with(A=0.0, B=0.0, kappa=0.0)
    assert active_count(pop, 3.0) == pytest.approx(pop.entry.n0 * (pop.xr - pop.x0), rel=1e-13)


@pytest.mark.parametrize("fn", [active_count, retired_count])
def test_counts_stable_under_refinement(fn):
    coarse, fine = fn(POP, 0.0, 0.05), fn(POP, 0.0, 0.025)
    assert abs(coarse - fine) < 1e-8 * abs(fine)


def test_active_count_falls_with_negative_growth_without_trend():
    pop = pop_with(trend=False, kappa=-0.01)
    values = [active_count(pop, t) for t in (0.0, 5.0, 10.0)]
    assert values[0] > values[1] > values[2]


def test_retired_count_zero_on_empty_interval():
    pop = pop_with(xr=100.0, m0=100.0, xi=0.0)
    assert retired_count(pop, 4.0) == 0.0
    assert dependency_ratio(pop, 4.0) == 0.0


def test_stronger_longevity_trend_raises_retirees():
    assert retired_count(pop_with(omega=4.0), 10.0) > retired_count(pop_with(omega=20.0), 10.0)


def test_dependency_ratio_rises_as_entry_growth_falls():
    ratios = [dependency_ratio(pop_with(kappa=k), 10.0) for k in (0.01, 0.0, -0.01)]
    assert 0 < ratios[0] < ratios[1] < ratios[2]


def test_dependency_ratio_degenerate(monkeypatch):
    # p(x0, t) = 1 keeps NC positive for any valid parameters, so force the edge
    import robust_pension.demography as demo

    monkeypatch.setattr(demo, "active_count", lambda pop, t, step=0.025: 0.0)
    with pytest.raises(DegenerateError):
        demo.dependency_ratio(POP, 0.0)


def test_counts_vectorised_match_scalar():
    t = np.array([0.0, 3.3, 10.0, 20.0])
    vec = retired_count(POP, t)
    assert np.array_equal(vec, [retired_count(POP, float(x)) for x in t])


def test_negative_time_rejected():
    with pytest.raises(DomainError):
        active_count(POP, -1.0)


def test_invalid_population_layout():
    with pytest.raises(InvalidParameterError):
        pop_with(x0=70.0)
    with pytest.raises(InvalidParameterError):
        pop_with(xi=1.5)


def test_life_table_rows():
    rows = life_table(POP, [0.0, 10.0])
    first = rows[0]
    assert first[0] == POP.x0 and first[3] == 1.0
    assert rows[-1][3] == 0.0
    assert math.isclose(rows[-1][0], 102.5)
