"""Big-M linearization of the bilinear planning model.

Binary-times-continuous products (charged energy, charging time, and the
consecutive-driving carry-over) are replaced by auxiliary variables bounded
with big-M inequalities; the AND/OR of the stop bits are written as linear
inequalities.  The resulting MILP is used for two things: its continuous
relaxation gives a lower bound and a rounded base plan, and with the
binaries fixed it must reproduce the fixed-binary LP exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lp import LPResult, solve_lp
from .model import BinaryPlan, RouteInstance

ROUND_THRESHOLD = 1e-6


class RelaxationInfeasible(RuntimeError):
    """The continuous relaxation has no feasible point."""


@dataclass
class MILPModel:
    names: list[str]
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray  # bool mask of binary variables
    n_stations: int

    def index(self, name: str) -> int:
        return self._index[name]

    def __post_init__(self):
        self._index = {name: i for i, name in enumerate(self.names)}

    def fixed_bounds(self, plan: BinaryPlan) -> list[tuple[float, float]]:
        """Variable bounds with every binary pinned to ``plan``."""
        lb, ub = self.lb.copy(), self.ub.copy()
        for k, (b, r) in enumerate(plan):
            for name, value in (
                (f"b[{k}]", b),
                (f"rb[{k}]", r),
                (f"vb[{k}]", b | r),
                (f"hb[{k}]", b & r),
            ):
                i = self._index[name]
                lb[i] = ub[i] = value
        return list(zip(lb, ub))

    def solve_fixed(self, plan: BinaryPlan) -> LPResult:
        return solve_lp(self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq, bounds=self.fixed_bounds(plan))

    def solve_relaxed(self) -> LPResult:
        return solve_lp(self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq, bounds=list(zip(self.lb, self.ub)))

    def values(self, x: np.ndarray, prefix: str) -> list[float]:
        return [float(x[self._index[f"{prefix}[{k}]"]]) for k in range(self.n_stations)]


class _Builder:
    def __init__(self):
        self.names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.integer: list[bool] = []
        self.cost: dict[int, float] = {}
        self.ub_rows: list[tuple[dict, float]] = []
        self.eq_rows: list[tuple[dict, float]] = []
        self.idx: dict[str, int] = {}

    def var(self, name, lb=0.0, ub=math.inf, binary=False):
        self.idx[name] = len(self.names)
        self.names.append(name)
        self.lb.append(lb)
        self.ub.append(1.0 if binary else ub)
        self.integer.append(binary)

    def _row(self, terms):
        row: dict[int, float] = {}
        for name, coef in terms.items():
            j = self.idx[name]
            row[j] = row.get(j, 0.0) + coef
        return row

    def le(self, terms: dict, rhs: float):
        self.ub_rows.append((self._row(terms), rhs))

    def eq(self, terms: dict, rhs: float):
        self.eq_rows.append((self._row(terms), rhs))

    @staticmethod
    def _dense(rows, n):
        A = np.zeros((len(rows), n))
        for i, (row, _) in enumerate(rows):
            for j, a in row.items():
                A[i, j] = a
        return A, np.array([rhs for _, rhs in rows], dtype=float)

    def build(self, n_stations) -> MILPModel:
        n = len(self.names)
        c = np.zeros(n)
        for j, a in self.cost.items():
            c[j] = a
        A_ub, b_ub = self._dense(self.ub_rows, n)
        A_eq, b_eq = self._dense(self.eq_rows, n)
        return MILPModel(
            names=self.names,
            c=c,
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=A_eq,
            b_eq=b_eq,
            lb=np.array(self.lb),
            ub=np.array(self.ub),
            integer=np.array(self.integer),
            n_stations=n_stations,
        )


def linearize(inst: RouteInstance, energy_big_m: Optional[float] = None) -> MILPModel:
    """Mixed-integer linear model equivalent to the bilinear one.

    ``energy_big_m`` defaults to the full battery energy, which bounds any
    single charge.
    """
    n = inst.n
    bat, hos, cost = inst.battery, inst.hos, inst.cost
    taus, d = inst.segment_times, inst.detours
    p = bat.consumption
    m_e = bat.full_energy if energy_big_m is None else energy_big_m
    m_t = cost.delta_big
    m_c = hos.max_daily

    mb = _Builder()
    for k in range(n):
        for name in ("b", "rb", "vb", "hb"):
            mb.var(f"{name}[{k}]", binary=True)
        mb.var(f"t[{k}]", ub=m_t)
        for name in ("th", "de", "deh", "w", "z"):
            mb.var(f"{name}[{k}]")
    for k in range(n + 1):
        mb.var(f"e[{k}]")
        mb.var(f"c[{k}]")

    for k in range(n):
        mb.cost[mb.idx[f"th[{k}]"]] = inst.prices[k]
        mb.cost[mb.idx[f"z[{k}]"]] = cost.time_loss

    mb.eq({"e[0]": 1.0}, bat.initial_energy - p * taus[0])
    mb.eq({"c[0]": 1.0}, taus[0])
    for k in range(n):
        b, rb, vb, hb = (f"{x}[{k}]" for x in ("b", "rb", "vb", "hb"))
        t, th, de, deh, w, z = (f"{x}[{k}]" for x in ("t", "th", "de", "deh", "w", "z"))
        e, e1, c, c1 = f"e[{k}]", f"e[{k + 1}]", f"c[{k}]", f"c[{k + 1}]"
        rate = inst.rates[k]
        s = inst.stations[k]

        # logic: hb = b AND rb, vb = b OR rb
        mb.le({hb: 1.0, rb: -1.0}, 0.0)
        mb.le({hb: 1.0, b: -1.0}, 0.0)
        mb.le({b: 1.0, rb: 1.0, hb: -1.0}, 1.0)
        mb.le({b: 1.0, vb: -1.0}, 0.0)
        mb.le({rb: 1.0, vb: -1.0}, 0.0)
        mb.le({vb: 1.0, b: -1.0, rb: -1.0}, 0.0)

        # charged energy and its product with b
        mb.eq({de: 1.0, t: -rate}, 0.0)
        mb.le({deh: 1.0, b: -m_e}, 0.0)
        mb.le({de: 1.0, deh: -1.0, b: m_e}, m_e)
        mb.le({deh: 1.0, de: -1.0}, 0.0)
        # charging time and its product with b
        mb.le({th: 1.0, b: -m_t}, 0.0)
        mb.le({t: 1.0, th: -1.0, b: m_t}, m_t)
        mb.le({th: 1.0, t: -1.0}, 0.0)
        # b*de = rate * (b*t); valid on integer points and tightens the relaxation
        mb.eq({deh: 1.0, th: -rate}, 0.0)

        mb.eq({e1: 1.0, e: -1.0, deh: -1.0, vb: 2 * p * d[k]}, -p * taus[k + 1])
        mb.le({de: 1.0, e: 1.0}, bat.full_energy + p * d[k])
        mb.le({e: -1.0}, -(bat.safety_margin + p * d[k]))

        # w = rb * c; the carry-over (1-rb)(c + b d) = c + b d - w - hb d
        mb.le({w: 1.0, rb: -m_c}, 0.0)
        mb.le({c: 1.0, w: -1.0, rb: m_c}, m_c)
        mb.le({w: 1.0, c: -1.0}, 0.0)
        mb.eq({c1: 1.0, vb: -d[k], c: -1.0, b: -d[k], w: 1.0, hb: d[k]}, taus[k + 1])
        mb.le({c: 1.0}, hos.max_consecutive - d[k])

        mb.le({th: 1.0, b: s.prep, rb: hos.min_rest - cost.delta_small - cost.delta_big},
              hos.min_rest - cost.delta_small)
        mb.le({th: 1.0, b: 2 * d[k] + s.prep, z: -1.0}, 0.0)
        mb.le({rb: 2 * d[k] + hos.min_rest, z: -1.0}, 0.0)

    mb.le({f"e[{n}]": -1.0}, -bat.safety_margin)
    mb.le({f"c[{n}]": 1.0}, hos.max_consecutive)
    mb.le({f"vb[{k}]": 2 * d[k] for k in range(n)}, hos.max_daily - sum(taus))
    mb.le({f"z[{k}]": 1.0 for k in range(n)}, hos.extra_budget)
    return mb.build(n)


def solve_relaxation(inst: RouteInstance, model: Optional[MILPModel] = None):
    """Optimal value and solution of the continuous relaxation, or ``(inf, None)``."""
    model = model or linearize(inst)
    res = model.solve_relaxed()
    if not res.optimal:
        return math.inf, None
    return res.objective, res.x


def relaxation_bound(inst: RouteInstance) -> float:
    """Lower bound on the optimal cost; ``inf`` when the relaxation is infeasible."""
    return solve_relaxation(inst)[0]


def round_plan(charge: list[float], rest: list[float], threshold: float = ROUND_THRESHOLD) -> BinaryPlan:
    """Any bit whose relaxed value exceeds ``threshold`` becomes 1."""
    return BinaryPlan(tuple((int(b > threshold), int(r > threshold)) for b, r in zip(charge, rest)))


def relaxed_base(inst: RouteInstance) -> BinaryPlan:
    return relaxed_base_with_bound(inst)[0]


def relaxed_base_with_bound(inst: RouteInstance) -> tuple[BinaryPlan, float]:
    model = linearize(inst)
    bound, x = solve_relaxation(inst, model)
    if x is None:
        raise RelaxationInfeasible("continuous relaxation is infeasible")
    return round_plan(model.values(x, "b"), model.values(x, "rb")), bound
