"""Continuous charging-time LP for a fixed binary plan.

With the stop/rest bits fixed, energies are affine in the charging times and
every constraint is linear.  The per-stop overhead ``max{...}`` is modelled
with an epigraph variable ``z_k``; because the objective increases in every
``z_k`` the epigraph is tight at the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import dynamics as dyn
from .lp import solve_standard
from .model import BinaryPlan, ContinuousPlan, RouteInstance, Violation

FEAS_TOL = 1e-6

OVERHEAD_CHARGE = "overhead_charge"
OVERHEAD_REST = "overhead_rest"


@dataclass
class LPModel:
    """``min c @ x`` s.t. ``A_ub @ x <= b_ub``, ``x >= 0``.

    ``tags`` names each variable (``("t", k)`` or ``("z", k)``); ``row_info``
    holds ``(constraint, index, unit)`` per row, where ``unit`` converts one
    minute of slack into the row's native units.  Rows that do not involve
    any variable are kept apart: ``broken`` lists the violated ones.
    """

    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    tags: list
    row_info: list
    broken: list

    @property
    def constant_violations(self) -> list[Violation]:
        return [Violation(name, k, residual) for name, k, _, residual in self.broken]

    @property
    def trivially_infeasible(self) -> bool:
        return bool(self.broken)

    @property
    def n_vars(self) -> int:
        return self.c.size

    def var(self, tag: str, k: int) -> Optional[int]:
        try:
            return self.tags.index((tag, k))
        except ValueError:
            return None


@dataclass
class SubproblemResult:
    status: str  # "optimal" or "infeasible"
    plan: Optional[ContinuousPlan] = None
    cost: Optional[float] = None
    violation_score: Optional[float] = None
    trivial: bool = False

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"

    @property
    def rank_key(self) -> tuple[int, float]:
        """Feasible results first by cost, then infeasible ones by score."""
        if self.feasible:
            return (0, self.cost)
        score = self.violation_score
        return (1, np.inf if score is None else score)


def fixed_residuals(inst: RouteInstance, plan: BinaryPlan) -> list[tuple[str, Optional[int], float]]:
    """Driving-time constraints, which do not depend on charging times.

    Returns ``(constraint, index, rhs)`` with the row read as ``0 <= rhs``.
    """
    hos = inst.hos
    taus, d = inst.segment_times, inst.detours
    out = []
    cons = taus[0]
    for k, (b, r) in enumerate(plan):
        out.append((dyn.CONSECUTIVE_DRIVE, k, hos.max_consecutive - cons - d[k]))
        cons = dyn.step_consecutive(cons, b, r, d[k], taus[k + 1])
    out.append((dyn.CONSECUTIVE_DRIVE, inst.n, hos.max_consecutive - cons))
    drive = sum(taus) + sum(2 * v * dk for v, dk in zip(plan.visit, d))
    out.append((dyn.DAILY_DRIVE, None, hos.max_daily - drive))
    return out


def build_subproblem(inst: RouteInstance, plan: BinaryPlan) -> LPModel:
    n = inst.n
    if len(plan) != n:
        raise ValueError(f"plan must have length {n}")
    bat, hos, cost = inst.battery, inst.hos, inst.cost
    taus, d, rates = inst.segment_times, inst.detours, inst.rates
    p = bat.consumption

    t_st = [k for k, (b, _) in enumerate(plan) if b]
    z_st = [k for k, (b, r) in enumerate(plan) if b or r]
    r_st = [k for k, (_, r) in enumerate(plan) if r]
    nt = len(t_st)
    z_of = {k: nt + j for j, k in enumerate(z_st)}
    tags = [("t", k) for k in t_st] + [("z", k) for k in z_st]
    nv = len(tags)

    c = np.empty(nv)
    for j, k in enumerate(t_st):
        c[j] = inst.prices[k]
    c[nt:] = cost.time_loss

    m = n + (n + 1) + 2 * nt + len(r_st) + 1
    A = np.zeros((m, nv))
    b_ub = np.empty(m)
    info = []
    row = 0

    # Energy on first arrival at ramp k is e0 plus rate_j * t_j for charges before k.
    e0 = [bat.initial_energy - p * taus[0]]
    for k, (b, r) in enumerate(plan):
        e0.append(e0[k] - p * (2 * (b | r) * d[k] + taus[k + 1]))

    # charged energy at k <= full - (arrival energy at the station)
    for k in range(n):
        for j, kk in enumerate(t_st):
            if kk > k:
                break
            A[row, j] = rates[kk]
        b_ub[row] = bat.full_energy - e0[k] + p * d[k]
        info.append((dyn.CHARGE_CAP, k, p))
        row += 1
    for k in range(n + 1):
        for j, kk in enumerate(t_st):
            if kk >= k:
                break
            A[row, j] = -rates[kk]
        need = bat.safety_margin + (p * d[k] if k < n else 0.0)
        b_ub[row] = e0[k] - need
        info.append((dyn.ENERGY_MARGIN, k, p))
        row += 1
    for j, k in enumerate(t_st):
        r = plan[k][1]
        limit = (1 - r) * (hos.min_rest - cost.delta_small) + r * cost.delta_big
        A[row, j] = 1.0
        b_ub[row] = limit - inst.stations[k].prep
        info.append((dyn.REST_COUPLING, k, 1.0))
        row += 1
    for j, k in enumerate(t_st):
        A[row, j] = 1.0
        A[row, z_of[k]] = -1.0
        b_ub[row] = -(2 * d[k] + inst.stations[k].prep)
        info.append((OVERHEAD_CHARGE, k, 1.0))
        row += 1
    for k in r_st:
        A[row, z_of[k]] = -1.0
        b_ub[row] = -(2 * d[k] + hos.min_rest)
        info.append((OVERHEAD_REST, k, 1.0))
        row += 1
    A[row, nt:] = 1.0
    b_ub[row] = hos.extra_budget
    info.append((dyn.DEADLINE, None, 1.0))

    active = np.any(A != 0.0, axis=1)
    broken = [(name, k, 1.0, -rhs) for name, k, rhs in fixed_residuals(inst, plan) if rhs < -FEAS_TOL]
    for i in np.flatnonzero(~active & (b_ub < -FEAS_TOL)):
        name, k, unit = info[i]
        broken.append((name, k, unit, -float(b_ub[i])))
    if not active.all():
        keep = np.flatnonzero(active)
        A = np.ascontiguousarray(A[keep])
        b_ub = b_ub[keep]
        info = [info[i] for i in keep]
    return LPModel(c=c, A_ub=A, b_ub=b_ub, tags=tags, row_info=info, broken=broken)


def screen(inst: RouteInstance, plan: BinaryPlan) -> bool:
    """Cheap test for rows that no charging times can satisfy.

    True means the plan is certainly infeasible.  Checks the driving-time
    rows and the energy rows that precede the first charging stop.
    """
    for _, _, rhs in fixed_residuals(inst, plan):
        if rhs < -FEAS_TOL:
            return True
    bat = inst.battery
    p = bat.consumption
    taus, d = inst.segment_times, inst.detours
    e = bat.initial_energy - p * taus[0]
    for k, (b, r) in enumerate(plan):
        if e - bat.safety_margin - p * d[k] < -FEAS_TOL:
            return True
        if bat.full_energy - e + p * d[k] < -FEAS_TOL:
            return True
        if b:
            return False
        e -= p * (2 * r * d[k] + taus[k + 1])
    return e - bat.safety_margin < -FEAS_TOL


def violation_score(model: LPModel) -> float:
    """Least total slack (in minutes) that makes the model feasible.

    Every row gets its own nonnegative slack; energy rows are converted to
    minutes of driving through the consumption rate.  Rows without variables
    contribute their residual directly.
    """
    fixed = sum(residual / unit for _, _, unit, residual in model.broken)
    m, nv = model.A_ub.shape
    if m == 0:
        return fixed
    units = np.array([unit for _, _, unit in model.row_info])
    A = np.ascontiguousarray(np.hstack([model.A_ub, -np.diag(units)]))
    c = np.concatenate([np.zeros(nv), np.ones(m)])
    res = solve_standard(c, A, model.b_ub)
    if not res.optimal:
        raise RuntimeError("slack-augmented LP reported infeasible")
    return fixed + max(res.objective, 0.0)


def solve_subproblem(inst: RouteInstance, plan: BinaryPlan, score: bool = True) -> SubproblemResult:
    """Optimal charging times and cost for ``plan``.

    When the plan admits no charging times the result is infeasible and, if
    ``score`` is set, carries the minimal slack needed to repair it.
    :class:`hoscharge.lp.LPError` signals a numerical failure.
    """
    model = build_subproblem(inst, plan)
    trivial = model.trivially_infeasible
    if not trivial:
        res = solve_standard(model.c, model.A_ub, model.b_ub)
        if res.optimal:
            times = [0.0] * inst.n
            for j, (tag, k) in enumerate(model.tags):
                if tag == "t":
                    times[k] = float(res.x[j])
            return SubproblemResult("optimal", ContinuousPlan(times), res.objective)
    out = SubproblemResult("infeasible", trivial=trivial)
    if score:
        out.violation_score = violation_score(model)
    return out
