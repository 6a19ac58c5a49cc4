"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import itertools
import math
import statistics
import time
from pathlib import Path

import numpy as np
import pytest

from hoscharge import dynamics as dyn
from hoscharge.harness import GenConfig, aggregate, run_benchmark, suite_tau_range, write_rows, write_summary
from hoscharge.linearize import RelaxationInfeasible, linearize, relaxation_bound, relaxed_base
from hoscharge.model import CANDIDATES, BinaryPlan
from hoscharge.solvers import exact_solve, greedy_base, repeated_rollout, rollout, solve
from hoscharge.subproblem import solve_subproblem

from conftest import ACCEPTANCE, TINY2_COST, TINY2_PLAN, TINY2_TIMES, all_plans, make_tiny2, seeded

TOL = 1e-6
SUITE_FRACS = (0.6, 0.7, 0.8, 0.9, 1.0)
SUITE_MIN_FEASIBLE = 50
RESULTS_DIR = Path(__file__).resolve().parent.parent / "results"


def record(num, ok, detail):
    ACCEPTANCE.append((num, bool(ok), detail))
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def suites():
    """Seeded suites for N = 4..7, grown seed by seed until 50 rows are feasible."""
    rows = {}
    for n in (4, 5, 6, 7):
        rows[n] = []
        for seed in itertools.count():
            batch = [GenConfig(seed=seed, n=n, tau_range=suite_tau_range(n), frac=f) for f in SUITE_FRACS]
            rows[n] += run_benchmark(batch)
            if sum(r.feasible for r in rows[n]) >= SUITE_MIN_FEASIBLE:
                break
    RESULTS_DIR.mkdir(exist_ok=True)
    flat = [r for n in sorted(rows) for r in rows[n]]
    write_rows(flat, RESULTS_DIR / "acceptance_bench.csv")
    write_summary(aggregate(flat), RESULTS_DIR / "acceptance_bench_summary.csv")
    return rows


def test_criterion_1_tiny2_oracle():
    inst = make_tiny2()
    exact_solve(inst)  # compile the LP kernel before timing
    start = time.perf_counter()
    ex = exact_solve(inst)
    elapsed = time.perf_counter() - start
    ro = rollout(inst, greedy_base(inst))
    ok = (
        ex.feasible
        and abs(ex.cost - TINY2_COST) <= 1e-3
        and ex.binary_plan == BinaryPlan(TINY2_PLAN)
        and all(abs(a - b) <= 1e-3 for a, b in zip(ex.continuous_plan, TINY2_TIMES))
        and ro.binary_plan == ex.binary_plan
        and abs(ro.cost - ex.cost) <= 1e-9
        and elapsed < 0.1
    )
    record(1, ok, f"exact cost {ex.cost:.4f} plan {ex.binary_plan.choices}, rollout {ro.cost:.4f}, {elapsed * 1e3:.1f} ms")


def feasible_base_pairs(count):
    pairs = []
    for seed in itertools.count():
        n = 3 + seed % 4
        inst = seeded(1000 + seed, n, SUITE_FRACS[seed % len(SUITE_FRACS)])
        rng = np.random.default_rng(seed)
        bases = [greedy_base(inst), BinaryPlan.full(n)]
        try:
            bases.append(relaxed_base(inst))
        except RelaxationInfeasible:
            pass
        bases += [BinaryPlan(tuple(CANDIDATES[i] for i in rng.integers(0, 4, n))) for _ in range(2)]
        for base in dict.fromkeys(bases):
            res = solve_subproblem(inst, base, score=False)
            if res.feasible:
                pairs.append((inst, base, res.cost))
        if len(pairs) >= count:
            return pairs


def test_criterion_2_rollout_improves_feasible_base():
    pairs = feasible_base_pairs(200)
    bad = 0
    worst = -math.inf
    for inst, base, base_cost in pairs:
        rep = rollout(inst, base)
        clean = rep.feasible and dyn.check_feasibility(inst, rep.binary_plan, rep.continuous_plan) == []
        worst = max(worst, rep.cost - base_cost)
        bad += not (clean and rep.cost <= base_cost + TOL)
    record(2, bad == 0, f"{len(pairs)} pairs, {bad} violations, max(rollout - base) = {worst:.3g}")


def test_criterion_3_bound_sandwich(suites):
    bad, counts = [], {}
    for n, rows in suites.items():
        feas = [r for r in rows if r.feasible]
        counts[n] = len(feas)
        for r in feas:
            inst = seeded(r.seed, n, r.frac)
            lb = relaxation_bound(inst)
            ub = math.inf if r.ub is None else r.ub
            rs = math.inf if r.cost_rollout is None else r.cost_rollout
            if not (lb <= r.cost_exact + TOL and r.cost_exact <= rs + TOL and rs <= ub + TOL):
                bad.append((n, r.seed, r.frac))
    ok = not bad and all(c >= SUITE_MIN_FEASIBLE for c in counts.values())
    record(3, ok, f"feasible per N {counts}, sandwich violations {bad}")


def test_criterion_4_gap_quality(suites):
    parts, ok = [], True
    for n, rows in suites.items():
        feas = [r for r in rows if r.feasible]
        gaps = [r.gap_pct for r in feas if r.gap_pct is not None]
        failures = len(feas) - len(gaps)
        mean, median = statistics.fmean(gaps), statistics.median(gaps)
        ok &= mean <= 5.0 and median <= 1.0
        parts.append(f"N={n} mean {mean:.3f}% median {median:.3f}% ({len(gaps)} gaps, {failures} rollout infeasible)")
    record(4, ok, "; ".join(parts))


def test_criterion_5_call_counts_and_runtime(suites):
    ok = True
    for n, rows in suites.items():
        for r in rows:
            ok &= r.lp_exact is not None and r.lp_exact <= 4**n
            ok &= all(c <= 4 * n + 2 for c in r.lp_rollout_per_base)
    inst = seeded(10, 10, 0.8, extra_budget_min=220)
    solve(make_tiny2(), "rollout")
    start = time.perf_counter()
    rep = solve(inst, "rollout")
    elapsed = time.perf_counter() - start
    per_base = rep.meta["lp_calls_per_base"]
    ok &= all(c <= 4 * 10 + 2 for c in per_base) and elapsed < 5.0
    record(5, ok, f"counters within 4^N and 4N+2 on all suites; N=10 rollout {elapsed:.2f} s, calls per base {per_base}")


def test_criterion_6_linearization_equivalence():
    bad, checked = 0, 0
    for i in range(20):
        n = 1 + i % 4
        inst = seeded(500 + i, n, SUITE_FRACS[i % len(SUITE_FRACS)])
        model = linearize(inst)
        for plan in all_plans(n):
            fixed = model.solve_fixed(plan)
            direct = solve_subproblem(inst, plan, score=False)
            checked += 1
            if fixed.optimal != direct.feasible:
                bad += 1
            elif direct.feasible and abs(fixed.objective - direct.cost) > TOL:
                bad += 1
    record(6, bad == 0, f"20 instances, {checked} binary plans, {bad} mismatches")


def test_criterion_7_sufficient_conditions_sound():
    hits, bad = 0, 0
    budgets = (150, 250, 400, 600)
    for seed in range(120):
        inst = seeded(seed, 1 + seed % 8, (0.6, 0.8, 1.0)[seed % 3], extra_budget_min=budgets[seed % 4])
        if dyn.sufficient_feasibility(inst)[0]:
            hits += 1
            plan, cont = dyn.full_charge_plan(inst)
            bad += dyn.check_feasibility(inst, plan, cont) != []
    tiny = make_tiny2()
    not_necessary = not dyn.sufficient_feasibility(tiny)[0] and exact_solve(tiny).feasible
    ok = bad == 0 and hits > 0 and not_necessary
    record(7, ok, f"120 instances, {hits} pass the conditions, {bad} unsound; tiny2 feasible without them: {not_necessary}")


def test_criterion_8_repeated_rollout():
    bad, worst_iters, runs = 0, 0, 0
    for seed in range(50):
        n = 3 + seed % 4
        inst = seeded(2000 + seed, n, SUITE_FRACS[seed % len(SUITE_FRACS)])
        for base in (greedy_base(inst), BinaryPlan.full(n)):
            rep = repeated_rollout(inst, base)
            runs += 1
            trace = rep.trace
            monotone = all(b <= a + TOL for a, b in zip(trace, trace[1:]) if math.isfinite(a))
            worst_iters = max(worst_iters, rep.meta["iterations"])
            bad += not (monotone and rep.meta["converged"] and rep.meta["iterations"] <= 10)
    record(8, bad == 0, f"{runs} runs on 50 instances, {bad} violations, max iterations {worst_iters}")


def test_criterion_9_consecutive_cases():
    got = [dyn.step_consecutive(100, b, r, 5, 120) for b, r in ((1, 1), (1, 0), (0, 0))]
    record(9, got == [125, 230, 220], f"rest/charge-only/skip -> {got}")
