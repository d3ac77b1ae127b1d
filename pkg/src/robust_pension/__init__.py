"""Robust optimal investment and intergenerational risk sharing for a
collective hybrid pension plan under longevity trends and model ambiguity."""

from .demography import (
    AgeFrontier,
    EntryProcess,
    MortalityModel,
    PopulationStructure,
    active_count,
    dependency_ratio,
    hazard,
    retired_count,
    survival,
)
from .estimator import RobustPensionPolicy
from .exceptions import (
    AllPathsInvalidError,
    ConstraintViolation,
    DegenerateError,
    DomainError,
    InvalidParameterError,
    PensionModelError,
    QuadratureError,
    ScenarioParseError,
    SingularityError,
    StepFailure,
)
from .plan import (
    BASELINE,
    FundState,
    MarketParams,
    ObjectiveWeights,
    PensionRules,
    PlanConfig,
    target_liability,
    with_params,
)
from .policy import (
    ControlDecision,
    PolicyCoefficients,
    coefficients,
    coeff_PQ,
    realized_policy,
    special_case_preset,
    worst_case_drift,
)
from .simulation import SimulationSpec, SimulationSummary, sensitivity_sweep, simulate_paths, summarize
from .verification import foc_check, hjb_residual, solve_pq_ode, verification_report

__all__ = [name for name in dir() if not name.startswith("_")]
