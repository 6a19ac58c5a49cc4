"""Exact enumeration, base plans and rollout solvers."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from .linearize import RelaxationInfeasible, relaxation_bound, relaxed_base_with_bound
from .model import CANDIDATES, BinaryPlan, RouteInstance, SolveReport
from .subproblem import SubproblemResult, screen, solve_subproblem

EXACT_CAP = 12
TIE_TOL = 1e-9


class CapExceeded(ValueError):
    """Exact enumeration refused: too many stations."""


@dataclass(frozen=True)
class RolloutConfig:
    """Stage order, anytime budget and repetition limit for rollout.

    ``stage_order`` defaults to forward order and ``stage_budget`` to all
    stages.  Stages past the budget keep their base values.
    """

    stage_order: Optional[tuple[int, ...]] = None
    stage_budget: Optional[int] = None
    max_repeat_iters: int = 10

    @classmethod
    def reverse(cls, n: int, **kwargs) -> "RolloutConfig":
        return cls(stage_order=tuple(range(n - 1, -1, -1)), **kwargs)

    def order(self, n: int) -> tuple[int, ...]:
        order = tuple(range(n)) if self.stage_order is None else tuple(self.stage_order)
        if sorted(order) != list(range(n)):
            raise ValueError("stage_order must be a permutation of the stations")
        budget = n if self.stage_budget is None else self.stage_budget
        if not 0 <= budget <= n:
            raise ValueError("stage_budget must lie in [0, N]")
        return order[:budget]


def _better(res: SubproblemResult, best: Optional[SubproblemResult]) -> bool:
    """Strict improvement, so earlier candidates win ties."""
    if best is None:
        return True
    a, b = res.rank_key, best.rank_key
    if a[0] != b[0]:
        return a[0] < b[0]
    return a[1] < b[1] - TIE_TOL


def _report(inst, plan, res, method, **kwargs) -> SolveReport:
    return SolveReport(
        binary_plan=plan,
        continuous_plan=res.plan if res is not None and res.feasible else None,
        cost=res.cost if res is not None and res.feasible else math.inf,
        feasible=bool(res is not None and res.feasible),
        method=method,
        **kwargs,
    )


def greedy_base(inst: RouteInstance) -> BinaryPlan:
    """Stop only when the next ramp would be out of reach, then fill up.

    The plan is built from the battery alone and may violate the driving-time
    or deadline constraints.
    """
    bat = inst.battery
    p = bat.consumption
    taus, d, n = inst.segment_times, inst.detours, inst.n
    e = bat.initial_energy - p * taus[0]
    choices = []
    for k in range(n):
        coast = e - p * taus[k + 1]
        need = bat.safety_margin + (p * d[k + 1] if k + 1 < n else 0.0)
        if coast < need:
            choices.append((1, 1))
            e = bat.full_energy - p * (d[k] + taus[k + 1])
        else:
            choices.append((0, 0))
            e = coast
    return BinaryPlan(tuple(choices))


def exact_solve(inst: RouteInstance, cap: int = EXACT_CAP) -> SolveReport:
    """Minimum-cost plan by solving the LP of every binary plan.

    Plans whose driving-time or pre-charge energy rows already fail are
    counted in ``pruned`` instead of ``lp_calls``.
    """
    n = inst.n
    if n > cap:
        raise CapExceeded(f"exact enumeration capped at {cap} stations, got {n}")
    start = time.perf_counter()
    best_plan, best = None, None
    calls = pruned = 0
    for choices in itertools.product(CANDIDATES, repeat=n):
        plan = BinaryPlan(choices)
        if screen(inst, plan):
            pruned += 1
            continue
        res = solve_subproblem(inst, plan, score=False)
        calls += 1
        if res.feasible and (best is None or res.cost < best.cost - TIE_TOL):
            best_plan, best = plan, res
    return _report(
        inst,
        best_plan,
        best,
        "exact",
        lp_calls=calls,
        pruned=pruned,
        wall_time=time.perf_counter() - start,
    )


def rollout(inst: RouteInstance, base: BinaryPlan, cfg: Optional[RolloutConfig] = None) -> SolveReport:
    """Improve ``base`` one station at a time.

    At each visited station the four choices are tried with earlier stations
    at their improved values and later ones at the base values; the cheapest
    feasible choice is kept, or the least-violating one when none is
    feasible.  A final LP fixes the charging times of the resulting plan.
    """
    cfg = cfg or RolloutConfig()
    n = inst.n
    if len(base) != n:
        raise ValueError(f"base plan must have length {n}")
    start = time.perf_counter()
    order = cfg.order(n)
    plan = base
    base_res = None
    calls = 0
    for step, k in enumerate(order):
        best_choice, best = None, None
        for choice in CANDIDATES:
            res = solve_subproblem(inst, plan.replace(k, choice))
            calls += 1
            if step == 0 and choice == base[k]:
                base_res = res
            if _better(res, best):
                best_choice, best = choice, res
        plan = plan.replace(k, best_choice)
    final = solve_subproblem(inst, plan)
    calls += 1
    if base_res is None:
        base_res = final
    rep = _report(
        inst,
        plan,
        final,
        "rollout",
        upper_bound=base_res.cost if base_res.feasible else None,
        lp_calls=calls,
        wall_time=time.perf_counter() - start,
    )
    rep.meta = {
        "base": base.to_list(),
        "base_feasible": base_res.feasible,
        "base_cost": base_res.cost if base_res.feasible else None,
        "violation_score": None if final.feasible else final.violation_score,
    }
    return rep


def multi_base_rollout(
    inst: RouteInstance, bases: Sequence[BinaryPlan], cfg: Optional[RolloutConfig] = None
) -> SolveReport:
    """Rollout from each distinct base; keep the cheapest feasible result."""
    if not bases:
        raise ValueError("need at least one base plan")
    start = time.perf_counter()
    unique = list(dict.fromkeys(bases))
    runs = [rollout(inst, b, cfg) for b in unique]
    best = None
    for rep in runs:
        if rep.feasible and (best is None or rep.cost < best.cost - TIE_TOL):
            best = rep
    chosen = best or runs[0]
    ubs = [rep.upper_bound for rep in runs if rep.upper_bound is not None]
    out = SolveReport(
        binary_plan=chosen.binary_plan,
        continuous_plan=chosen.continuous_plan,
        cost=chosen.cost,
        feasible=chosen.feasible,
        method="rollout",
        upper_bound=min(ubs) if ubs else None,
        lp_calls=sum(rep.lp_calls for rep in runs),
        wall_time=time.perf_counter() - start,
    )
    out.meta = {
        "bases": [rep.meta["base"] for rep in runs],
        "base_costs": [rep.meta["base_cost"] for rep in runs],
        "rollout_costs": [rep.cost if rep.feasible else None for rep in runs],
        "lp_calls_per_base": [rep.lp_calls for rep in runs],
        "chosen": runs.index(chosen),
    }
    return out


def repeated_rollout(
    inst: RouteInstance, base: BinaryPlan, cfg: Optional[RolloutConfig] = None
) -> SolveReport:
    """Feed each rollout result back in as the next base.

    Stops once the binary plan reproduces itself or after
    ``cfg.max_repeat_iters`` rounds.  ``trace`` holds the cost of every round.
    """
    cfg = cfg or RolloutConfig()
    start = time.perf_counter()
    current = base
    trace = []
    calls = 0
    first = rep = None
    converged = False
    for _ in range(cfg.max_repeat_iters):
        rep = rollout(inst, current, cfg)
        first = first or rep
        calls += rep.lp_calls
        trace.append(rep.cost)
        if rep.binary_plan == current:
            converged = True
            break
        current = rep.binary_plan
    rep.method = "repeated_rollout"
    rep.upper_bound = first.upper_bound
    rep.lp_calls = calls
    rep.trace = trace
    rep.wall_time = time.perf_counter() - start
    rep.meta = dict(rep.meta, iterations=len(trace), converged=converged)
    return rep


def evaluate_plan(inst: RouteInstance, plan: BinaryPlan, method: str) -> SolveReport:
    """Report for a fixed binary plan with LP-optimal charging times."""
    start = time.perf_counter()
    res = solve_subproblem(inst, plan)
    rep = _report(inst, plan, res, method, lp_calls=1, wall_time=time.perf_counter() - start)
    if not res.feasible:
        rep.meta = {"violation_score": res.violation_score}
    return rep


def base_plans(inst: RouteInstance, names: Sequence[str]):
    """Build the named base plans; returns ``(plans, lower_bound)``.

    The relaxed base comes with the relaxation bound for free; when it is
    not requested the bound is computed separately.  An infeasible
    relaxation yields ``inf`` and drops the relaxed base.
    """
    plans = []
    lower = None
    for name in names:
        if name == "greedy":
            plans.append(greedy_base(inst))
        elif name == "relaxed":
            try:
                plan, lower = relaxed_base_with_bound(inst)
            except RelaxationInfeasible:
                lower = math.inf
                continue
            plans.append(plan)
        else:
            raise ValueError(f"unknown base {name!r}")
    if lower is None:
        lower = relaxation_bound(inst)
    return plans, lower


def solve(
    inst: RouteInstance,
    method: str = "rollout",
    bases: Sequence[str] = ("greedy", "relaxed"),
    cfg: Optional[RolloutConfig] = None,
    repeat: bool = False,
) -> SolveReport:
    """Dispatch by method name: ``exact``, ``rollout``, ``greedy`` or ``relaxed``."""
    start = time.perf_counter()
    if method == "exact":
        return exact_solve(inst)
    if method in ("greedy", "relaxed"):
        plans, lower = base_plans(inst, [method])
        if not plans:
            rep = SolveReport(None, None, math.inf, False, method, lower_bound=lower)
        else:
            rep = evaluate_plan(inst, plans[0], method)
            rep.lower_bound = lower
        rep.wall_time = time.perf_counter() - start
        return rep
    if method != "rollout":
        raise ValueError(f"unknown method {method!r}")

    plans, lower = base_plans(inst, bases)
    if not plans:
        rep = SolveReport(None, None, math.inf, False, "rollout", lower_bound=lower)
    elif repeat:
        reps = [repeated_rollout(inst, b, cfg) for b in dict.fromkeys(plans)]
        best = min((r for r in reps if r.feasible), key=lambda r: r.cost, default=reps[0])
        ubs = [r.upper_bound for r in reps if r.upper_bound is not None]
        best.upper_bound = min(ubs) if ubs else None
        best.lp_calls = sum(r.lp_calls for r in reps)
        rep = best
    else:
        rep = multi_base_rollout(inst, plans, cfg)
    rep.lower_bound = lower
    rep.wall_time = time.perf_counter() - start
    return rep
