"""Charging and rest planning for electric trucks under driving-time rules."""

from .dynamics import (
    check_feasibility,
    evaluate_cost,
    full_charge_plan,
    max_charge_times,
    simulate,
    step_consecutive,
    step_energy,
    sufficient_feasibility,
)
from .linearize import linearize, relaxation_bound, relaxed_base
from .model import (
    CANDIDATES,
    BatteryParams,
    BinaryPlan,
    ContinuousPlan,
    CostParams,
    HosParams,
    InstanceError,
    RouteInstance,
    SolveReport,
    Station,
    Violation,
    load_instance,
    make_instance,
    parse_instance,
    serialize_instance,
    validate_instance,
)
from .solvers import (
    RolloutConfig,
    exact_solve,
    greedy_base,
    multi_base_rollout,
    repeated_rollout,
    rollout,
    solve,
)
from .subproblem import solve_subproblem

__all__ = [
    "CANDIDATES",
    "BatteryParams",
    "BinaryPlan",
    "ContinuousPlan",
    "CostParams",
    "HosParams",
    "InstanceError",
    "RolloutConfig",
    "RouteInstance",
    "SolveReport",
    "Station",
    "Violation",
    "check_feasibility",
    "evaluate_cost",
    "exact_solve",
    "full_charge_plan",
    "greedy_base",
    "linearize",
    "load_instance",
    "make_instance",
    "max_charge_times",
    "multi_base_rollout",
    "parse_instance",
    "relaxation_bound",
    "relaxed_base",
    "repeated_rollout",
    "rollout",
    "serialize_instance",
    "simulate",
    "solve",
    "solve_subproblem",
    "step_consecutive",
    "step_energy",
    "sufficient_feasibility",
    "validate_instance",
]
