"""Scenario files: a flat JSON object with every plan parameter, the
simulation settings and an output directory.

Unknown keys are rejected.  Missing keys take the baseline defaults and each
fill-in is logged.  :func:`validate` reports every violated constraint at once.
"""

import json
import logging
import math
from dataclasses import asdict, fields

from .exceptions import ConstraintViolation, PensionModelError, ScenarioParseError
from .plan import LIABILITY_DISCOUNTS, PHI_STAR_FORMS, PlanConfig, flat_params, with_params
from .demography import SURVIVAL_FORMS
from .simulation import MEASURES, SimulationSpec

log = logging.getLogger(__name__)

PLAN_DEFAULTS = flat_params(PlanConfig())
SPEC_DEFAULTS = asdict(SimulationSpec())
DEFAULTS = {**PLAN_DEFAULTS, **SPEC_DEFAULTS, "output_dir": "out"}

_CHOICES = {
    "survival_form": SURVIVAL_FORMS,
    "liability_discount": LIABILITY_DISCOUNTS,
    "phi_star_form": PHI_STAR_FORMS,
    "measure": MEASURES,
}
_BOOLS = ("longevity_trend", "zero_investment")
_INTS = ("time_steps", "steps", "paths", "seed", "n_jobs")


def load_scenario(path):
    """Parse a scenario file into a raw dict (no validation)."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioParseError(f"{path}: top level must be an object")
    return raw


def _check_types(values, problems):
    for key, value in values.items():
        if key in _CHOICES:
            if value not in _CHOICES[key]:
                problems.append(f"{key} must be one of {list(_CHOICES[key])}, got {value!r}")
        elif key in _BOOLS:
            if not isinstance(value, bool):
                problems.append(f"{key} must be true or false, got {value!r}")
        elif key == "output_dir":
            if not isinstance(value, str) or not value:
                problems.append("output_dir must be a non-empty string")
        elif key in _INTS:
            if isinstance(value, bool) or not isinstance(value, int):
                problems.append(f"{key} must be an integer, got {value!r}")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(f"{key} must be a number, got {value!r}")
        elif not math.isfinite(value) and key != "omega":
            problems.append(f"{key} must be finite, got {value!r}")


def _check_constraints(v, problems):
    def need(ok, message):
        if not ok:
            problems.append(message)

    need(v["A"] >= 0, f"A={v['A']}: Makeham base hazard must be >= 0")
    need(v["B"] >= 0, f"B={v['B']}: Makeham scale must be >= 0")
    need(v["theta"] > 1, f"theta={v['theta']}: Makeham growth base must satisfy theta > 1")
    need(not v["longevity_trend"] or v["omega"] > 0,
         f"omega={v['omega']}: longevity parameter must satisfy omega > 0")
    need(0 <= v["xi"] <= 1, f"xi={v['xi']}: maximum-age frontier slope must lie in [0, 1]")
    need(v["n0"] > 0, f"n0={v['n0']}: entrant density must be > 0")
    need(v["x0"] < v["xr"] <= v["m0"],
         f"ages x0={v['x0']}, xr={v['xr']}, m0={v['m0']}: need x0 < xr <= m0")
    need(v["sigma"] > 0, f"sigma={v['sigma']}: volatility must be > 0")
    need(v["mu"] > v["r"], f"mu={v['mu']}, r={v['r']}: the model assumes mu > r (no-arbitrage)")
    need(abs(v["r"]) >= 1e-12, "r = 0: the annuity form of Q(t) divides by r")
    need(v["c"] > 0, f"c={v['c']}: target contribution must be > 0")
    need(v["b"] > 0, f"b={v['b']}: target benefit must be > 0")
    need(v["T"] > 0, f"T={v['T']}: horizon must be > 0")
    need(v["a0"] >= 0, f"a0={v['a0']}: initial fund must be >= 0")
    for g in ("gamma1", "gamma2", "gamma3"):
        need(v[g] > 0, f"{g}={v[g]}: cost weights must be > 0")
    need(v["k"] >= 0, f"k={v['k']}: ambiguity aversion must be >= 0")
    singular = abs(2.0 * v["k"] - 1.0) < 1e-12
    need(not singular, "k = 0.5: the factor 2k - 1 vanishes, so g3, pi* and phi* are singular")
    if not singular and v["sigma"] > 0:
        g3 = ((v["mu"] - v["r"]) / v["sigma"]) ** 2 / (2.0 * v["k"] - 1.0)
        need(abs(2.0 * v["r"] + g3) >= 1e-12,
             f"2r + g3 = 0 (g3={g3}): the closed form of R(t) divides by it")
    need(v["age_step"] > 0, f"age_step={v['age_step']}: must be > 0")
    need(v["time_steps"] >= 1, f"time_steps={v['time_steps']}: must be >= 1")
    need(v["steps"] >= 1, f"steps={v['steps']}: must be >= 1")
    need(v["paths"] >= 1, f"paths={v['paths']}: must be >= 1")
    need(0 <= v["seed"] < 2 ** 64, f"seed={v['seed']}: must be an unsigned 64-bit integer")
    need(v["n_jobs"] >= 1, f"n_jobs={v['n_jobs']}: must be >= 1")
    need(v["overflow_guard"] > 0, f"overflow_guard={v['overflow_guard']}: must be > 0")


def validate(scenario):
    """Resolve a raw scenario dict into ``(PlanConfig, SimulationSpec, output_dir)``.

    Raises :class:`ConstraintViolation` listing every problem found.
    """
    unknown = sorted(set(scenario) - set(DEFAULTS))
    if unknown:
        raise ConstraintViolation([f"unknown key {key!r}" for key in unknown])
    values = dict(DEFAULTS)
    for key in DEFAULTS:
        if key in scenario:
            values[key] = scenario[key]
        else:
            log.info("scenario key %r missing; using default %r", key, DEFAULTS[key])

    problems = []
    _check_types(values, problems)
    if problems:
        raise ConstraintViolation(problems)
    _check_constraints(values, problems)
    if problems:
        raise ConstraintViolation(problems)

    try:
        config = with_params(PlanConfig(), **{k: values[k] for k in PLAN_DEFAULTS})
        spec = SimulationSpec(**{f.name: values[f.name] for f in fields(SimulationSpec)})
    except PensionModelError as exc:
        raise ConstraintViolation([str(exc)]) from exc
    return config, spec, values["output_dir"]


def emit(config, spec=None, output_dir="out"):
    """Scenario dict for a resolved configuration; ``validate(emit(...))`` round-trips."""
    spec = SimulationSpec() if spec is None else spec
    return {**flat_params(config), **asdict(spec), "output_dir": output_dir}


def write_scenario(path, config, spec=None, output_dir="out"):
    with open(path, "w") as fh:
        json.dump(emit(config, spec, output_dir), fh, indent=2, sort_keys=True)
        fh.write("\n")
