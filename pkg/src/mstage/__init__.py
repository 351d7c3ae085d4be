"""Multistage tests of multiple composite hypotheses.

Build plans with :func:`build_plan`, tune their risk with :func:`tune`,
evaluate operating characteristics with :func:`oc_exact` or
:func:`simulate_plan`, and execute them with :func:`run_plan`.
"""

from .boundaries import NonTerminationError, min_terminal_size, sample_schedule
from .io import load_plan, loads_plan, dumps_plan, save_plan
from .models import BoundaryKind, Family, ModelSpec
from .oc import (
    ExactUnavailableError,
    OCReport,
    asn,
    band_crossing_probability,
    gamma_sum_survival,
    interval_risk_bounds,
    oc_exact,
)
from .plans import (
    DecisionOutcome,
    HypothesesSpec,
    InsufficientDataError,
    PlanInvariantError,
    TestPlan,
    TestShape,
    build_plan,
    run_plan,
    stage_decision,
)
from .simulate import SimReport, finite_population_path, simulate_plan
from .tuner import TuningError, TuningResult, risk_check, tune

__all__ = [
    "BoundaryKind",
    "DecisionOutcome",
    "ExactUnavailableError",
    "Family",
    "HypothesesSpec",
    "InsufficientDataError",
    "ModelSpec",
    "NonTerminationError",
    "OCReport",
    "PlanInvariantError",
    "SimReport",
    "TestPlan",
    "TestShape",
    "TuningError",
    "TuningResult",
    "asn",
    "band_crossing_probability",
    "build_plan",
    "dumps_plan",
    "finite_population_path",
    "gamma_sum_survival",
    "interval_risk_bounds",
    "load_plan",
    "loads_plan",
    "min_terminal_size",
    "oc_exact",
    "risk_check",
    "run_plan",
    "sample_schedule",
    "save_plan",
    "simulate_plan",
    "stage_decision",
    "tune",
]
