import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoscharge import dynamics as dyn
from hoscharge.model import BinaryPlan, ContinuousPlan, make_instance

from conftest import TINY2_COST, make_tiny2, seeded

OPT = BinaryPlan(((1, 1), (0, 0)))
NONE = BinaryPlan(((0, 0), (0, 0)))


@pytest.mark.parametrize("t, kw, cap, expected", [(10, 300, 375, 50.0), (0, 300, 375, 0.0), (73.23, 300, 375, 366.15)])
def test_charging_energy(t, kw, cap, expected):
    assert dyn.charging_energy(t, kw, cap) == pytest.approx(expected)


def test_charging_energy_respects_truck_cap():
    assert dyn.charging_energy(60, 600, 375) == pytest.approx(375)


@pytest.mark.parametrize(
    "b, r, de, expected",
    [(1, 1, 366.15, 395.25), (0, 0, 0.0, 47.4), (0, 1, 0.0, 29.1)],
)
def test_step_energy(b, r, de, expected):
    assert dyn.step_energy(267, b, r, de, 5, 120, 1.83) == pytest.approx(expected)


@pytest.mark.parametrize("b, r, expected", [(1, 1, 125), (1, 0, 230), (0, 0, 220)])
def test_step_consecutive_cases(b, r, expected):
    assert dyn.step_consecutive(100, b, r, 5, 120) == expected


@pytest.mark.parametrize(
    "b, r, t, expected",
    [(1, 1, 61.98, 77.98), (0, 0, 0, 0), (0, 1, 0, 55)],
)
def test_stop_overhead(b, r, t, expected):
    assert dyn.stop_overhead(b, r, t, 5, 6, 45) == pytest.approx(expected)


def test_simulate_tiny2_optimum(tiny2):
    traj = dyn.simulate(tiny2, OPT, ContinuousPlan((61.98, 0.0)))
    assert traj.energies == pytest.approx((267.0, 339.0, 156.0))
    assert traj.consecutive == pytest.approx((100, 125, 225))
    assert traj.charged == pytest.approx((309.9, 0.0))
    assert traj.overheads == pytest.approx((77.98, 0.0))
    assert traj.feasible


def test_simulate_no_stops(tiny2):
    traj = dyn.simulate(tiny2, NONE, ContinuousPlan.zeros(2))
    assert traj.energies == pytest.approx((267.0, 47.4, -135.6))
    energy = {v.index for v in traj.violations if v.constraint == dyn.ENERGY_MARGIN}
    assert energy == {1, 2}


def test_no_stops_accumulates_driving():
    inst = seeded(3, 5)
    traj = dyn.simulate(inst, BinaryPlan.empty(5), ContinuousPlan.zeros(5))
    acc = 0.0
    for k in range(6):
        acc += inst.segment_times[k]
        assert traj.consecutive[k] == pytest.approx(acc)


def test_evaluate_cost(tiny2):
    assert dyn.evaluate_cost(tiny2, OPT, ContinuousPlan((61.98, 0))) == pytest.approx(TINY2_COST)
    assert dyn.evaluate_cost(tiny2, OPT, ContinuousPlan((73.23, 0))) == pytest.approx(167.506)
    assert dyn.evaluate_cost(tiny2, NONE, ContinuousPlan.zeros(2)) == 0.0


def test_check_feasibility_clean(tiny2):
    assert dyn.check_feasibility(tiny2, OPT, ContinuousPlan((61.98, 0))) == []


def test_check_feasibility_rest_coupling(tiny2):
    out = dyn.check_feasibility(tiny2, BinaryPlan(((1, 0), (0, 0))), ContinuousPlan((61.98, 0)))
    rest = [v for v in out if v.constraint == dyn.REST_COUPLING]
    assert len(rest) == 1 and rest[0].index == 0
    assert rest[0].residual == pytest.approx(23.08)


def test_check_feasibility_energy_residual(tiny2):
    out = dyn.check_feasibility(tiny2, NONE, ContinuousPlan.zeros(2))
    first = next(v for v in out if v.constraint == dyn.ENERGY_MARGIN and v.index == 1)
    assert first.residual == pytest.approx(117.75)


def test_check_feasibility_order(tiny2):
    # overcharge, no rest, long drive: several families at once
    inst = tiny2.with_params(max_daily_min=320, max_consec_min=200)
    out = dyn.check_feasibility(inst, BinaryPlan(((1, 0), (1, 0))), ContinuousPlan((100.0, 50.0)))
    order = [dyn.CHARGE_CAP, dyn.ENERGY_MARGIN, dyn.CONSECUTIVE_DRIVE, dyn.DAILY_DRIVE, dyn.REST_COUPLING, dyn.DEADLINE]
    ranks = [order.index(v.constraint) for v in out]
    assert ranks == sorted(ranks)
    assert {dyn.CHARGE_CAP, dyn.CONSECUTIVE_DRIVE, dyn.DAILY_DRIVE, dyn.REST_COUPLING} <= {v.constraint for v in out}


def test_sufficient_feasibility_tiny2(tiny2):
    assert dyn.sufficient_feasibility(tiny2) == (False, ["deadline"])
    assert dyn.sufficient_feasibility(tiny2.with_params(extra_budget_min=300)) == (True, [])


def test_sufficient_feasibility_first_leg_too_long():
    inst = make_instance([260, 50], [15])
    ok, failed = dyn.sufficient_feasibility(inst)
    assert not ok and "initial_leg_duration" in failed


def test_max_charge_times(tiny2):
    assert dyn.max_charge_times(tiny2) == pytest.approx((93.6, 93.6))


def test_full_charge_plan_tops_up(tiny2):
    plan, cont = dyn.full_charge_plan(tiny2)
    traj = dyn.simulate(tiny2, plan, cont)
    for k in range(2):
        arrival = traj.energies[k] - tiny2.battery.consumption * tiny2.detours[k]
        assert arrival + traj.charged[k] == pytest.approx(tiny2.battery.full_energy)


def test_simulate_calls_each_step_n_times(monkeypatch):
    inst = seeded(1, 6)
    counts = {}
    for name in ("charging_energy", "step_energy", "step_consecutive", "stop_overhead"):
        orig = getattr(dyn, name)

        def wrapped(*args, _orig=orig, _name=name):
            counts[_name] = counts.get(_name, 0) + 1
            return _orig(*args)

        monkeypatch.setattr(dyn, name, wrapped)
    traj = dyn._roll(inst, BinaryPlan.full(6), ContinuousPlan((10.0,) * 6))
    assert counts == {"charging_energy": 6, "step_energy": 6, "step_consecutive": 6, "stop_overhead": 6}
    assert len(traj[0]) == 7 and len(traj[1]) == 7


bits = st.sampled_from([0, 1])


@given(st.floats(0, 300), st.floats(0, 300), st.floats(0, 30), st.floats(0, 200))
def test_rest_resets_consecutive(c1, c2, d, tau):
    assert dyn.step_consecutive(c1, 1, 1, d, tau) == dyn.step_consecutive(c2, 1, 1, d, tau)
    assert dyn.step_consecutive(c1, 0, 1, d, tau) == dyn.step_consecutive(c2, 0, 1, d, tau)


# a charging stop costs at least its prep time, so draw p > 0
@given(bits, bits, st.floats(0, 100), st.floats(0, 100), st.floats(0, 30), st.floats(0.5, 20), st.floats(1, 60))
def test_overhead_monotone_and_zero_only_without_stop(b, r, t1, t2, d, p, rest):
    lo, hi = sorted((t1, t2))
    assert dyn.stop_overhead(b, r, lo, d, p, rest) <= dyn.stop_overhead(b, r, hi, d, p, rest)
    zero = dyn.stop_overhead(b, r, lo, d, p, rest) == 0
    if b == 0 and r == 0:
        assert zero
    else:
        assert not zero


@given(st.integers(0, 10_000), st.integers(1, 8), st.sampled_from([0.3, 0.6, 0.9, 1.0]), st.sampled_from([150, 250, 400]))
@settings(max_examples=150, deadline=None)
def test_sufficient_conditions_imply_full_charge_feasible(seed, n, frac, budget):
    inst = seeded(seed, n, frac, extra_budget_min=budget)
    ok, _ = dyn.sufficient_feasibility(inst)
    if ok:
        plan, cont = dyn.full_charge_plan(inst)
        assert dyn.check_feasibility(inst, plan, cont) == []


def test_sufficient_conditions_tiny2_not_necessary():
    from hoscharge.solvers import exact_solve

    inst = make_tiny2()
    assert not dyn.sufficient_feasibility(inst)[0]
    assert exact_solve(inst).feasible
