"""Population dynamics: Makeham mortality with a longevity drift, a linear
maximum-age frontier and Malthusian entry, aggregated into the number of
active members NC(t) and retirees NB(t).

All ages and times are in years; cohort counts are per-year densities.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DegenerateError, DomainError, InvalidParameterError
from .quadrature import simpson, simpson_intervals

AGE_STEP = 0.025

SURVIVAL_FORMS = ("as-printed", "path-integral")


@dataclass(frozen=True)
class MortalityModel:
    """Hazard ``A + B * theta ** (x - t / omega)``.

    ``trend=False`` switches the calendar-time drift off, i.e. ``omega = inf``.
    """

    A: float = 0.000022
    B: float = 2.7e-6
    theta: float = 1.124
    omega: float = 4.0
    trend: bool = True

    def __post_init__(self):
        problems = []
        if not self.A >= 0:
            problems.append(f"A must be >= 0, got {self.A}")
        if not self.B >= 0:
            problems.append(f"B must be >= 0, got {self.B}")
        if not self.theta > 1:
            problems.append(f"theta must be > 1, got {self.theta}")
        if self.trend and not self.omega > 0:
            problems.append(f"omega must be > 0, got {self.omega}")
        if problems:
            raise InvalidParameterError("; ".join(problems))

    @property
    def inv_omega(self):
        """``1 / omega``, exactly zero without a longevity trend."""
        if not self.trend or math.isinf(self.omega):
            return 0.0
        return 1.0 / self.omega

    def without_trend(self):
        return replace(self, trend=False)


@dataclass(frozen=True)
class AgeFrontier:
    """Maximum attainable age ``m(t) = m0 + xi * t``."""

    m0: float = 100.0
    xi: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise InvalidParameterError(f"xi must lie in [0, 1], got {self.xi}")

    def max_age(self, t):
        return self.m0 + self.xi * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class EntryProcess:
    """Entrant density ``n(t) = n0 * exp(kappa * t)``; ``t`` may be negative."""

    n0: float = 10.0
    kappa: float = -0.005

    def __post_init__(self):
        if not self.n0 > 0:
            raise InvalidParameterError(f"n0 must be > 0, got {self.n0}")

    def density(self, t):
        return self.n0 * np.exp(self.kappa * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class PopulationStructure:
    mortality: MortalityModel = MortalityModel()
    frontier: AgeFrontier = AgeFrontier()
    entry: EntryProcess = EntryProcess()
    x0: float = 25.0
    xr: float = 65.0
    survival_form: str = "as-printed"

    def __post_init__(self):
        if not self.x0 < self.xr <= self.frontier.m0:
            raise InvalidParameterError(
                f"need x0 < xr <= m0, got x0={self.x0}, xr={self.xr}, m0={self.frontier.m0}"
            )
        if self.survival_form not in SURVIVAL_FORMS:
            raise InvalidParameterError(
                f"survival_form must be one of {SURVIVAL_FORMS}, got {self.survival_form!r}"
            )


def hazard(model, x, t):
    """Force of mortality at age ``x`` and calendar time ``t``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("age must be non-negative")
    out = model.A + model.B * model.theta ** (x - np.asarray(t, dtype=float) * model.inv_omega)
    return out if out.ndim else float(out)


def _log_survival(pop, x, t):
    """``ln p(x, t)`` from the closed form, without frontier truncation."""
    m = pop.mortality
    io = m.inv_omega
    x0 = pop.x0
    ln_theta = math.log(m.theta)
    upper = m.theta ** (x - t * io)
    lower = m.theta ** ((1.0 - io) * x0 + (x - t) * io)
    if pop.survival_form == "as-printed":
        makeham = (m.B / ln_theta) * (upper - lower)
    else:
        # exact integral of the hazard along the cohort's life line
        slope = 1.0 - io
        if abs(slope) < 1e-12:
            makeham = m.B * lower * (x - x0)
        else:
            makeham = (m.B / (slope * ln_theta)) * (upper - lower)
    return -m.A * (x - x0) - makeham


def _survival_smooth(pop, x, t):
    return np.exp(_log_survival(pop, x, t))


def survival(pop, x, t):
    """Probability that the cohort aged ``x`` at time ``t`` survived from entry.

    Hard-truncated to zero at and beyond the frontier ``m(t)``.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(x < pop.x0):
        raise DomainError(f"survival is defined for ages >= x0={pop.x0}")
    p = np.where(x >= pop.frontier.max_age(t), 0.0, _survival_smooth(pop, x, t))
    return p if p.ndim else float(p)


def cohort_integral(pop, t, lo, hi, step, survival_fn=None):
    """Simpson integral of ``n(t - (x - x0)) p(x, t)`` over ``x`` in ``[lo, hi(t)]``.

    ``hi`` may vary with ``t``; points sharing an interval count are batched.
    The smooth survival is used on the closed interval so the frontier cut-off
    does not cost accuracy at the endpoint.  ``survival_fn(x, t)`` replaces the
    survival law when given.
    """
    if survival_fn is None:
        survival_fn = lambda x, tt: _survival_smooth(pop, x, tt)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), t.shape)
    counts = np.array([simpson_intervals(h - lo, step) for h in hi])
    out = np.zeros(t.shape)
    for n in np.unique(counts):
        if n == 0:
            continue
        idx = np.nonzero(counts == n)[0]
        u = np.linspace(0.0, 1.0, int(n) + 1)
        tt = t[idx][:, None]
        x = lo + (hi[idx][:, None] - lo) * u
        f = pop.entry.density(tt - (x - pop.x0)) * survival_fn(x, tt)
        out[idx] = simpson(f, 0.0, 1.0, axis=1) * (hi[idx] - lo)
    return out


def _as_scalar(t, values):
    return float(values[0]) if np.ndim(t) == 0 else values


def active_count(pop, t, step=AGE_STEP):
    """NC(t): density of contributing members aged ``[x0, xr]``."""
    _check_time(t)
    return _as_scalar(t, cohort_integral(pop, t, pop.x0, pop.xr, step))


def retired_count(pop, t, step=AGE_STEP):
    """NB(t): density of retirees aged ``[xr, m(t)]``."""
    _check_time(t)
    hi = pop.frontier.max_age(np.atleast_1d(np.asarray(t, dtype=float)))
    return _as_scalar(t, cohort_integral(pop, t, pop.xr, hi, step))


def dependency_ratio(pop, t, step=AGE_STEP):
    """Retirees per active member, NB(t) / NC(t)."""
    nc = np.asarray(active_count(pop, t, step))
    if np.any(nc == 0):
        raise DegenerateError("no active members: dependency ratio undefined")
    ratio = np.asarray(retired_count(pop, t, step)) / nc
    return ratio if ratio.ndim else float(ratio)


def life_table(pop, times, age_step=1.0):
    """Rows ``(age, t, hazard, survival)`` on an age grid from ``x0`` to ``m(t)``."""
    rows = []
    for t in np.atleast_1d(times):
        top = float(pop.frontier.max_age(t))
        ages = np.arange(pop.x0, top + 1e-9, age_step)
        if ages[-1] < top:
            ages = np.append(ages, top)
        mu = hazard(pop.mortality, ages, t)
        p = survival(pop, ages, t)
        rows.extend(zip(ages, np.full(ages.shape, float(t)), np.atleast_1d(mu), np.atleast_1d(p)))
    return rows


def _check_time(t):
    if np.any(np.asarray(t) < 0):
        raise DomainError("cohort counts are defined for t >= 0")
