"""Forward simulation, cost and feasibility of a charging-and-rest plan."""

from __future__ import annotations

from .model import BinaryPlan, ContinuousPlan, RouteInstance, Trajectory, Violation

FEAS_TOL = 1e-6

# Constraint identifiers, in checking order.
CHARGE_CAP = "charge_cap"
ENERGY_MARGIN = "energy_margin"
CONSECUTIVE_DRIVE = "consecutive_drive"
DAILY_DRIVE = "daily_drive"
REST_COUPLING = "rest_coupling"
DEADLINE = "deadline"


def charging_energy(t: float, charge_kw: float, max_accept_kw: float) -> float:
    """Energy (kWh) delivered in ``t`` minutes; linear in time."""
    return t * min(charge_kw, max_accept_kw) / 60.0


def step_energy(e, charge, rest, charged, detour, tau_next, consumption):
    """Battery energy on first arrival at the next ramp."""
    visit = charge | rest
    return e + charge * charged - consumption * (2 * visit * detour + tau_next)


def step_consecutive(c, charge, rest, detour, tau_next):
    """Consecutive driving time on first arrival at the next ramp.

    A rest restarts the count at the station; a charge-only stop keeps the
    accumulated time and adds the round-trip detour.
    """
    visit = charge | rest
    return tau_next + visit * detour + (1 - rest) * (c + charge * detour)


def stop_overhead(charge, rest, t, detour, prep, min_rest):
    """Extra minutes spent off the route at one station."""
    return max(charge * (2 * detour + prep + t), rest * (2 * detour + min_rest))


def _roll(inst: RouteInstance, plan: BinaryPlan, cont: ContinuousPlan):
    n = inst.n
    if len(plan) != n or len(cont) != n:
        raise ValueError(f"plans must have length {n}")
    bat = inst.battery
    taus = inst.segment_times
    e = [bat.initial_energy - bat.consumption * taus[0]]
    c = [taus[0]]
    charged = []
    overheads = []
    for k, (s, (b, r)) in enumerate(zip(inst.stations, plan)):
        t = cont[k] if b else 0.0
        de = b * charging_energy(t, s.charge_kw, bat.max_accept_kw)
        charged.append(de)
        e.append(step_energy(e[k], b, r, de, s.detour, taus[k + 1], bat.consumption))
        c.append(step_consecutive(c[k], b, r, s.detour, taus[k + 1]))
        overheads.append(stop_overhead(b, r, t, s.detour, s.prep, inst.hos.min_rest))
    return e, c, charged, overheads


def _violations(inst, plan, cont, e, c, charged, overheads) -> list[Violation]:
    n = inst.n
    bat, hos, cost = inst.battery, inst.hos, inst.cost
    d = inst.detours
    out: list[Violation] = []

    def check(name, k, residual):
        if residual > FEAS_TOL:
            out.append(Violation(name, k, residual))

    for k in range(n):
        check(CHARGE_CAP, k, max(-charged[k], charged[k] - (bat.full_energy - (e[k] - bat.consumption * d[k]))))
    for k in range(n):
        check(ENERGY_MARGIN, k, bat.safety_margin + bat.consumption * d[k] - e[k])
    check(ENERGY_MARGIN, n, bat.safety_margin - e[n])
    for k in range(n):
        check(CONSECUTIVE_DRIVE, k, c[k] + d[k] - hos.max_consecutive)
    check(CONSECUTIVE_DRIVE, n, c[n] - hos.max_consecutive)
    drive = sum(inst.segment_times) + sum(2 * v * dk for v, dk in zip(plan.visit, d))
    check(DAILY_DRIVE, None, drive - hos.max_daily)
    for k, ((b, r), s) in enumerate(zip(plan, inst.stations)):
        t = cont[k] if b else 0.0
        limit = (1 - r) * (hos.min_rest - cost.delta_small) + r * cost.delta_big
        check(REST_COUPLING, k, b * (t + s.prep) - limit)
    check(DEADLINE, None, sum(overheads) - hos.extra_budget)
    return out


def simulate(inst: RouteInstance, plan: BinaryPlan, cont: ContinuousPlan) -> Trajectory:
    e, c, charged, overheads = _roll(inst, plan, cont)
    return Trajectory(
        energies=tuple(e),
        consecutive=tuple(c),
        charged=tuple(charged),
        overheads=tuple(overheads),
        violations=tuple(_violations(inst, plan, cont, e, c, charged, overheads)),
    )


def check_feasibility(inst: RouteInstance, plan: BinaryPlan, cont: ContinuousPlan) -> list[Violation]:
    """All violated constraints with their positive residual in native units."""
    return list(simulate(inst, plan, cont).violations)


def evaluate_cost(inst: RouteInstance, plan: BinaryPlan, cont: ContinuousPlan) -> float:
    """Charging cost plus the price of the time spent off the route."""
    hos = inst.hos
    total_charge = 0.0
    total_overhead = 0.0
    for k, ((b, r), s) in enumerate(zip(plan, inst.stations)):
        t = cont[k] if b else 0.0
        total_charge += inst.prices[k] * b * t
        total_overhead += stop_overhead(b, r, t, s.detour, s.prep, hos.min_rest)
    return total_charge + inst.cost.time_loss * total_overhead


def max_charge_times(inst: RouteInstance) -> tuple[float, ...]:
    """Time to charge the whole usable capacity at each station."""
    usable = inst.battery.full_energy - inst.battery.safety_margin
    return tuple(usable / r for r in inst.rates)


def full_charge_plan(inst: RouteInstance) -> tuple[BinaryPlan, ContinuousPlan]:
    """Stop, rest and top the battery up to full at every station."""
    bat = inst.battery
    e = bat.initial_energy - bat.consumption * inst.segment_times[0]
    times = []
    for k, s in enumerate(inst.stations):
        arrival = e - bat.consumption * s.detour
        t = max(0.0, (bat.full_energy - arrival) / inst.rates[k])
        times.append(t)
        e = bat.full_energy - bat.consumption * (s.detour + inst.segment_times[k + 1])
    return BinaryPlan.full(inst.n), ContinuousPlan(times)


def sufficient_feasibility(inst: RouteInstance) -> tuple[bool, list[str]]:
    """Closed-form conditions under which stopping everywhere is feasible.

    Returns ``(ok, failed)``; ``failed`` names each condition that does not
    hold.  Conditions are sufficient only: a feasible instance may fail them.
    """
    bat, hos = inst.battery, inst.hos
    taus, d, n = inst.segment_times, inst.detours, inst.n
    p = bat.consumption
    failed: list[str] = []

    if bat.initial_energy < bat.safety_margin + p * (taus[0] + d[0]):
        failed.append("initial_leg_energy")
    for k in range(1, n):
        if bat.full_energy < bat.safety_margin + p * (d[k - 1] + taus[k] + d[k]):
            failed.append(f"station_leg_energy[{k}]")
    # The final leg starts at the last station, so its detour counts too.
    if bat.full_energy < bat.safety_margin + p * (d[n - 1] + taus[n]):
        failed.append("final_leg_energy")

    if taus[0] + d[0] > hos.max_consecutive:
        failed.append("initial_leg_duration")
    for k in range(1, n):
        if d[k - 1] + taus[k] + d[k] > hos.max_consecutive:
            failed.append(f"station_leg_duration[{k}]")
    if d[n - 1] + taus[n] > hos.max_consecutive:
        failed.append("final_leg_duration")

    if sum(taus) + 2 * sum(d) > hos.max_daily:
        failed.append("total_drive")

    t_max = max_charge_times(inst)
    overhead = sum(
        stop_overhead(1, 1, t_max[k], s.detour, s.prep, hos.min_rest) for k, s in enumerate(inst.stations)
    )
    if overhead > hos.extra_budget:
        failed.append("deadline")
    if any(t_max[k] + s.prep > inst.cost.delta_big for k, s in enumerate(inst.stations)):
        failed.append("rest_dwell_bound")
    return not failed, failed
