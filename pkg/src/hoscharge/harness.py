"""Seeded instance generation, benchmark runs and parameter sweeps."""

from __future__ import annotations

import csv
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import RouteInstance, apply_overrides, make_instance
from .solvers import EXACT_CAP, exact_solve, solve

log = logging.getLogger(__name__)

CSV_HEADER = (
    "n,seed,frac,cost_exact,cost_rollout,lb,ub,gap_pct,"
    "lp_exact,lp_rollout,t_exact_s,t_rollout_s,feasible"
).split(",")
SUMMARY_HEADER = [
    "n", "rows", "feasible_rows", "rollout_failures", "aog_rs",
    "median_gap_rs", "aog_ub", "mean_t_exact_s", "mean_t_rollout_s",
]
SWEEP_HEADER = ["param", "value", "N", "AOG_RS", "AOG_UB"]


def fraction_grid(lo: float = 0.20, hi: float = 1.00, step: float = 0.05) -> tuple[float, ...]:
    """Initial-battery fractions 20%, 25%, ..., 100% (17 values by default)."""
    count = int(round((hi - lo) / step)) + 1
    return tuple(round(lo + i * step, 10) for i in range(count))


def suite_tau_range(n: int, max_daily: float = 540.0) -> tuple[float, float]:
    """Segment-time range whose expected total stays well inside a day's driving.

    The default [30, 120] range makes routes with seven or more stations
    exceed the daily limit almost surely; this shrinks the upper end so the
    mean total is about 80% of ``max_daily``.
    """
    hi = 2 * 0.8 * max_daily / (n + 1) - 30.0
    return 30.0, float(min(120.0, max(40.0, hi)))


@dataclass(frozen=True)
class GenConfig:
    seed: int
    n: int
    tau_range: tuple[float, float] = (30.0, 120.0)
    detour_range: tuple[float, float] = (2.0, 15.0)
    frac: float = 1.0
    overrides: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        for name in ("tau_range", "detour_range"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise ValueError(f"{name} must satisfy 0 <= lo <= hi")
        if not 0 < self.frac <= 1:
            raise ValueError("frac must lie in (0, 1]")

    def key(self) -> tuple:
        return (self.n, self.seed, self.frac)


def generate_instance(cfg: GenConfig) -> RouteInstance:
    """Random route from ``cfg``; identical seeds give identical instances.

    Times are drawn from numpy's PCG64 generator and rounded to 0.01 min.
    The seed alone drives the route, so instances that differ only in the
    battery fraction share their segment and detour times.
    """
    rng = np.random.default_rng(cfg.seed)
    taus = np.round(rng.uniform(*cfg.tau_range, size=cfg.n + 1), 2)
    detours = np.round(rng.uniform(*cfg.detour_range, size=cfg.n), 2)
    inst = make_instance([float(t) for t in taus], [float(d) for d in detours])
    overrides = dict(cfg.overrides)
    if "initial_kwh" not in overrides:
        full = overrides.get("full_kwh", inst.battery.full_energy)
        overrides["initial_kwh"] = cfg.frac * full
    return apply_overrides(inst, overrides)


@dataclass
class BenchRow:
    n: int
    seed: int
    frac: float
    cost_exact: Optional[float]
    cost_rollout: Optional[float]
    lb: Optional[float]
    ub: Optional[float]
    gap_pct: Optional[float]
    lp_exact: Optional[int]
    lp_rollout: Optional[int]
    t_exact_s: Optional[float]
    t_rollout_s: Optional[float]
    feasible: bool
    error: Optional[str] = None
    lp_rollout_per_base: list = field(default_factory=list)

    def csv_values(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "true" if v else "false"
            return repr(v) if isinstance(v, float) else str(v)

        return [fmt(getattr(self, name)) for name in CSV_HEADER]

    @classmethod
    def from_csv(cls, rec: dict) -> "BenchRow":
        def num(key, kind=float):
            return None if rec[key] == "" else kind(rec[key])

        return cls(
            n=int(rec["n"]),
            seed=int(rec["seed"]),
            frac=float(rec["frac"]),
            cost_exact=num("cost_exact"),
            cost_rollout=num("cost_rollout"),
            lb=num("lb"),
            ub=num("ub"),
            gap_pct=num("gap_pct"),
            lp_exact=num("lp_exact", int),
            lp_rollout=num("lp_rollout", int),
            t_exact_s=num("t_exact_s"),
            t_rollout_s=num("t_rollout_s"),
            feasible=rec["feasible"] == "true",
        )


def gap_percent(cost: float, reference: float) -> Optional[float]:
    """100 (cost - reference) / reference; zero when both are zero."""
    if reference == 0:
        return 0.0 if cost == 0 else None
    return 100.0 * (cost - reference) / reference


def _finite(x):
    return x if x is not None and math.isfinite(x) else None


def bench_instance(inst: RouteInstance, cfg: GenConfig, methods: Sequence[str] = ("exact", "rollout")) -> BenchRow:
    row = BenchRow(cfg.n, cfg.seed, cfg.frac, None, None, None, None, None, None, None, None, None, False)
    exact = roll = None
    try:
        if "exact" in methods and inst.n <= EXACT_CAP:
            exact = exact_solve(inst)
            row.cost_exact = _finite(exact.cost)
            row.lp_exact = exact.lp_calls
            row.t_exact_s = exact.wall_time
        if "rollout" in methods:
            start = time.perf_counter()
            roll = solve(inst, "rollout")
            row.t_rollout_s = time.perf_counter() - start
            row.cost_rollout = _finite(roll.cost)
            row.lb = _finite(roll.lower_bound)
            row.ub = roll.upper_bound
            row.lp_rollout = roll.lp_calls
            row.lp_rollout_per_base = list(roll.meta.get("lp_calls_per_base", []))
    except Exception as exc:  # keep the rest of the suite going
        log.exception("scenario %s failed", cfg.key())
        row.error = f"{type(exc).__name__}: {exc}"
    ref = exact if exact is not None else roll
    row.feasible = bool(ref is not None and ref.feasible)
    if row.cost_exact is not None and row.cost_rollout is not None:
        row.gap_pct = gap_percent(row.cost_rollout, row.cost_exact)
    return row


def _bench_one(cfg: GenConfig, methods: Sequence[str]) -> BenchRow:
    return bench_instance(generate_instance(cfg), cfg, methods)


def run_benchmark(
    scenarios: Iterable[GenConfig],
    methods: Sequence[str] = ("exact", "rollout"),
    csv_path=None,
    workers: int = 1,
) -> list[BenchRow]:
    """Solve every scenario; rows come back sorted by ``(n, seed, frac)``.

    ``workers > 1`` spreads scenarios over a process pool.  With
    ``csv_path`` the rows are written there and the per-N summary next to
    it with a ``_summary`` suffix.
    """
    scenarios = list(scenarios)
    if workers > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_one, scenarios, [tuple(methods)] * len(scenarios)))
    else:
        rows = [_bench_one(cfg, methods) for cfg in scenarios]
    rows.sort(key=lambda r: (r.n, r.seed, r.frac))
    if csv_path is not None:
        write_rows(rows, csv_path)
        path = Path(csv_path)
        write_summary(aggregate(rows), path.with_name(path.stem + "_summary" + path.suffix))
    return rows


def write_rows(rows: Sequence[BenchRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(row.csv_values())


def read_rows(path) -> list[BenchRow]:
    with open(path, newline="") as fh:
        return [BenchRow.from_csv(rec) for rec in csv.DictReader(fh)]


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return statistics.fmean(xs) if xs else None


def aggregate(rows: Sequence[BenchRow]) -> list[dict]:
    """Per-N average optimality gaps and mean times over feasible rows.

    A row is feasible when its reference solve (exact when run) is.  Gaps
    average over feasible rows whose rollout also found a feasible plan;
    the others are counted in ``rollout_failures``.
    """
    out = []
    for n in sorted({r.n for r in rows}):
        group = [r for r in rows if r.n == n]
        ok = [r for r in group if r.feasible]
        gaps = [r.gap_pct for r in ok if r.gap_pct is not None]
        ub_gaps = [
            gap_percent(r.ub, r.cost_exact) for r in ok if r.ub is not None and r.cost_exact is not None
        ]
        out.append(
            {
                "n": n,
                "rows": len(group),
                "feasible_rows": len(ok),
                "rollout_failures": sum(r.cost_rollout is None for r in ok),
                "aog_rs": _mean(gaps),
                "median_gap_rs": statistics.median(gaps) if gaps else None,
                "aog_ub": _mean(ub_gaps),
                "mean_t_exact_s": _mean(r.t_exact_s for r in ok),
                "mean_t_rollout_s": _mean(r.t_rollout_s for r in ok),
            }
        )
    return out


def write_summary(summary: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_HEADER)
        w.writeheader()
        for rec in summary:
            w.writerow({k: "" if v is None else (repr(v) if isinstance(v, float) else v) for k, v in rec.items()})


def scenarios_from_config(cfg: dict) -> list[GenConfig]:
    """Expand a bench config dict into one :class:`GenConfig` per run.

    Keys: ``stations`` (list of N), ``seeds`` (list, or an int count),
    ``fracs`` (list, default the 17-point grid), ``tau_range`` (pair, or
    ``"auto"`` for :func:`suite_tau_range`), ``detour_range``,
    ``overrides`` and ``overrides_by_n`` (keyed by N as a string).
    """
    known = {
        "stations", "seeds", "fracs", "tau_range", "detour_range",
        "overrides", "overrides_by_n", "methods", "grid", "workers",
    }
    unknown = set(cfg) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    seeds = cfg.get("seeds", [0])
    if isinstance(seeds, int):
        seeds = range(seeds)
    fracs = cfg.get("fracs") or fraction_grid()
    tau = cfg.get("tau_range", [30.0, 120.0])
    out = []
    for n in cfg["stations"]:
        overrides = dict(cfg.get("overrides", {}))
        overrides.update(cfg.get("overrides_by_n", {}).get(str(n), {}))
        tau_range = suite_tau_range(n) if tau == "auto" else tuple(tau)
        for seed in seeds:
            for frac in fracs:
                out.append(
                    GenConfig(
                        seed=int(seed),
                        n=int(n),
                        tau_range=tau_range,
                        detour_range=tuple(cfg.get("detour_range", (2.0, 15.0))),
                        frac=float(frac),
                        overrides=overrides,
                    )
                )
    return out


def sensitivity_sweep(
    scenarios: Sequence[GenConfig],
    grid: dict,
    methods: Sequence[str] = ("exact", "rollout"),
    csv_path=None,
    workers: int = 1,
) -> list[dict]:
    """Rerun the benchmark once per ``(param, value)`` in ``grid``.

    ``grid`` maps override keys (``safety_kwh``, ``prep_min``,
    ``time_loss_eur_per_min``, ...) to value lists.  Returns long-format
    records with the per-N gaps.
    """
    if not grid or not all(grid.values()):
        raise ValueError("sweep grid must be nonempty")
    records = []
    for param, values in grid.items():
        for value in values:
            runs = [replace(s, overrides={**s.overrides, param: value}) for s in scenarios]
            for agg in aggregate(run_benchmark(runs, methods, workers=workers)):
                records.append(
                    {"param": param, "value": value, "N": agg["n"], "AOG_RS": agg["aog_rs"], "AOG_UB": agg["aog_ub"]}
                )
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=SWEEP_HEADER)
            w.writeheader()
            for rec in records:
                w.writerow({k: "" if v is None else v for k, v in rec.items()})
    return records
