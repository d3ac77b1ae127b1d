"""Market, pension rules, objective weights and the fund's accounting identities."""

from dataclasses import dataclass, field, replace

import numpy as np

from .demography import AGE_STEP, PopulationStructure, active_count, retired_count
from .exceptions import InvalidParameterError, QuadratureError, SingularityError
from .quadrature import simpson, simpson_intervals

LIABILITY_DISCOUNTS = ("as-printed", "to-time-zero")
PHI_STAR_FORMS = ("as-printed", "foc-derived")


@dataclass(frozen=True)
class MarketParams:
    r: float = 0.01
    mu: float = 0.05
    sigma: float = 0.15

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameterError(f"sigma must be > 0, got {self.sigma}")
        if not self.mu > self.r:
            raise InvalidParameterError(
                f"mu={self.mu} must exceed r={self.r} (no-arbitrage assumption mu > r)"
            )

    @property
    def sharpe(self):
        return (self.mu - self.r) / self.sigma


@dataclass(frozen=True)
class PensionRules:
    """Target contribution ``c`` and benefit ``b`` at time 0, growing at ``tau``."""

    c: float = 0.1
    b: float = 0.7
    tau: float = 0.02
    a0: float = 3000.0
    T: float = 20.0

    def __post_init__(self):
        problems = []
        if not self.c > 0:
            problems.append(f"c must be > 0, got {self.c}")
        if not self.b > 0:
            problems.append(f"b must be > 0, got {self.b}")
        if not self.T > 0:
            problems.append(f"T must be > 0, got {self.T}")
        if not self.a0 >= 0:
            problems.append(f"a0 must be >= 0, got {self.a0}")
        if problems:
            raise InvalidParameterError("; ".join(problems))


@dataclass(frozen=True)
class ObjectiveWeights:
    """Cost weights and the ambiguity-aversion parameter ``k`` (``k = 0`` is neutral)."""

    gamma1: float = 2.0
    gamma2: float = 2.0
    gamma3: float = 2.0
    k: float = 2.0

    def __post_init__(self):
        problems = [
            f"{name} must be > 0, got {getattr(self, name)}"
            for name in ("gamma1", "gamma2", "gamma3")
            if not getattr(self, name) > 0
        ]
        if not self.k >= 0:
            problems.append(f"k must be >= 0, got {self.k}")
        if problems:
            raise InvalidParameterError("; ".join(problems))
        if abs(2.0 * self.k - 1.0) < 1e-12:
            raise SingularityError("k = 0.5 makes 2k - 1 vanish; the robust policy is undefined")


@dataclass(frozen=True)
class PlanConfig:
    population: PopulationStructure = field(default_factory=PopulationStructure)
    market: MarketParams = field(default_factory=MarketParams)
    rules: PensionRules = field(default_factory=PensionRules)
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    liability_discount: str = "as-printed"
    phi_star_form: str = "as-printed"
    age_step: float = AGE_STEP
    time_steps: int = 1000

    def __post_init__(self):
        if self.liability_discount not in LIABILITY_DISCOUNTS:
            raise InvalidParameterError(f"liability_discount must be one of {LIABILITY_DISCOUNTS}")
        if self.phi_star_form not in PHI_STAR_FORMS:
            raise InvalidParameterError(f"phi_star_form must be one of {PHI_STAR_FORMS}")
        g3 = self.market.sharpe ** 2 / (2.0 * self.weights.k - 1.0)
        if abs(2.0 * self.market.r + g3) < 1e-12:
            raise SingularityError("2r + g3 = 0: the closed form for R(t) divides by it")
        if abs(self.market.r) < 1e-12:
            raise SingularityError("r = 0 is not supported (annuity limit not implemented)")

    def replace(self, **changes):
        """Return a copy with flat parameter overrides, e.g. ``kappa=-0.01``."""
        return with_params(self, **changes)


@dataclass(frozen=True)
class FundState:
    t: float
    a: float


_PARAM_PATHS = {
    "A": ("population", "mortality", "A"),
    "B": ("population", "mortality", "B"),
    "theta": ("population", "mortality", "theta"),
    "omega": ("population", "mortality", "omega"),
    "longevity_trend": ("population", "mortality", "trend"),
    "m0": ("population", "frontier", "m0"),
    "xi": ("population", "frontier", "xi"),
    "n0": ("population", "entry", "n0"),
    "kappa": ("population", "entry", "kappa"),
    "x0": ("population", "x0"),
    "xr": ("population", "xr"),
    "survival_form": ("population", "survival_form"),
    "r": ("market", "r"),
    "mu": ("market", "mu"),
    "sigma": ("market", "sigma"),
    "c": ("rules", "c"),
    "b": ("rules", "b"),
    "tau": ("rules", "tau"),
    "a0": ("rules", "a0"),
    "T": ("rules", "T"),
    "gamma1": ("weights", "gamma1"),
    "gamma2": ("weights", "gamma2"),
    "gamma3": ("weights", "gamma3"),
    "k": ("weights", "k"),
    "liability_discount": ("liability_discount",),
    "phi_star_form": ("phi_star_form",),
    "age_step": ("age_step",),
    "time_steps": ("time_steps",),
}

PARAMETER_NAMES = tuple(_PARAM_PATHS)


def _set_path(obj, path, value):
    if len(path) == 1:
        return replace(obj, **{path[0]: value})
    child = getattr(obj, path[0])
    return replace(obj, **{path[0]: _set_path(child, path[1:], value)})


def with_params(config, **changes):
    """Copy of ``config`` with flat parameter names overridden.

    Nested dataclasses are rebuilt leaf-first so every invariant is rechecked.
    """
    for name, value in changes.items():
        if name not in _PARAM_PATHS:
            raise InvalidParameterError(f"unknown parameter {name!r}")
        config = _set_path(config, _PARAM_PATHS[name], value)
    return config


def flat_params(config):
    """Flat ``{name: value}`` view of a config, the inverse of :func:`with_params`."""
    out = {}
    for name, path in _PARAM_PATHS.items():
        obj = config
        for part in path:
            obj = getattr(obj, part)
        out[name] = obj
    return out


def target_contribution(rules, t):
    return rules.c * np.exp(rules.tau * np.asarray(t, dtype=float))


def target_benefit(rules, t):
    return rules.b * np.exp(rules.tau * np.asarray(t, dtype=float))


def time_grid(config, steps=None):
    steps = config.time_steps if steps is None else steps
    return np.linspace(0.0, config.rules.T, steps + 1)


def _liability_parts(config, time_steps, age_step):
    """Active and retiree branches of the target liability by nested Simpson.

    The inner age integral of the retiree branch runs up to the frontier
    ``m(t)`` at the same time ``t`` as the outer time integrand.
    """
    pop, rules, r = config.population, config.rules, config.market.r
    n_t = time_steps + (time_steps % 2)
    t = np.linspace(0.0, rules.T, n_t + 1)
    nc = active_count(pop, t, age_step)
    nb = retired_count(pop, t, age_step)
    growth = np.exp(rules.tau * t)
    benefit_flow = nb * rules.b * growth
    contribution_flow = nc * rules.c * growth
    time_discount = np.exp(-r * t)
    as_printed = config.liability_discount == "as-printed"

    def age_weight(lo, hi):
        # integral over age of the cohort shift factor exp(r (x - x0))
        n = simpson_intervals(hi - lo, age_step)
        if n == 0:
            return 0.0
        x = np.linspace(lo, hi, n + 1)
        w = np.exp(r * (x - pop.x0)) if as_printed else np.ones_like(x)
        return float(simpson(w, lo, hi))

    active_w = age_weight(pop.x0, pop.xr)
    active = active_w * float(simpson((benefit_flow - contribution_flow) * time_discount, 0.0, rules.T))
    retired_w = np.array([age_weight(pop.xr, m) for m in pop.frontier.max_age(t)])
    retired = float(simpson(benefit_flow * time_discount * retired_w, 0.0, rules.T))
    return active, retired


def target_liability(config, time_steps=None, age_step=None, check=False):
    """Time-invariant target liability ``L``.

    With ``check=True`` the computation is repeated with both steps halved and
    :class:`QuadratureError` is raised if the relative change exceeds 1e-6.
    """
    time_steps = config.time_steps if time_steps is None else time_steps
    age_step = config.age_step if age_step is None else age_step
    value = sum(_liability_parts(config, time_steps, age_step))
    if check:
        finer = sum(_liability_parts(config, 2 * time_steps, age_step / 2))
        if abs(finer - value) > 1e-6 * max(abs(finer), 1e-300):
            raise QuadratureError(f"target liability not converged: {value} vs {finer}")
    return value


def liability_branches(config, time_steps=None, age_step=None):
    """``(active, retired)`` contributions to ``L``."""
    time_steps = config.time_steps if time_steps is None else time_steps
    age_step = config.age_step if age_step is None else age_step
    return _liability_parts(config, time_steps, age_step)


def surplus(config, state, L):
    return state.a - L


def contribution_rule(config, state, lambda1):
    """Contribution per active cohort; may go negative (a rebate)."""
    return target_contribution(config.rules, state.t) - lambda1


def benefit_rule(config, state, lambda2):
    return target_benefit(config.rules, state.t) + lambda2


def asset_drift(config, state, pi, c_now, b_now, phi=0.0, nc=None, nb=None):
    """Drift and diffusion of the fund; ``phi != 0`` gives the distorted measure."""
    m = config.market
    pop = config.population
    nc = active_count(pop, state.t, config.age_step) if nc is None else nc
    nb = retired_count(pop, state.t, config.age_step) if nb is None else nb
    drift = pi * (m.mu - m.r) + state.a * m.r + nc * c_now - nb * b_now + m.sigma * pi * phi
    return drift, m.sigma * pi


BASELINE = PlanConfig()
