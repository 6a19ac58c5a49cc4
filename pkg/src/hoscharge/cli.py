"""Command-line entry point: solve, gen, bench and sweep."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .lp import LPError
from .model import InstanceError, load_instance, serialize_instance, validate_instance
from .solvers import CapExceeded, RolloutConfig, solve

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("hoscharge")


class UsageError(Exception):
    pass


def _bases(text: str) -> list[str]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in ("greedy", "relaxed")]
    if not names or bad:
        raise argparse.ArgumentTypeError(f"bases must be a comma list of greedy,relaxed; got {text!r}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hoscharge", description="Charging and rest planning for electric trucks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("--instance", required=True, type=Path)
    p.add_argument("--method", choices=["exact", "rollout", "greedy", "relaxed"], default="rollout")
    p.add_argument("--base", type=_bases, default=["greedy", "relaxed"], help="rollout bases, e.g. greedy,relaxed")
    p.add_argument("--order", choices=["forward", "reverse"], default="forward")
    p.add_argument("--budget", type=int, help="number of stations rollout may change")
    p.add_argument("--repeat", type=int, metavar="M", help="repeat rollout up to M times until the plan is stable")
    p.add_argument("--out", type=Path, help="report file (default: stdout)")

    p = sub.add_parser("gen", help="generate a seeded instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stations", type=int, required=True)
    p.add_argument("--frac", type=float, default=1.0, help="initial battery as a fraction of full")
    p.add_argument("--out", type=Path, help="instance file (default: stdout)")

    for name, text in (("bench", "run a benchmark suite"), ("sweep", "run a parameter sensitivity sweep")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--csv", required=True, type=Path)
        p.add_argument("--workers", type=int, help="process pool size (default: config 'workers' or 1)")
    return parser


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from exc


def cmd_solve(args) -> int:
    try:
        inst = load_instance(args.instance)
    except OSError as exc:
        raise UsageError(f"{args.instance}: {exc.strerror}") from exc
    problems = validate_instance(inst)
    if problems:
        raise UsageError("; ".join(f"{f}: {r}" for f, r in problems))
    n = inst.n
    if args.budget is not None and not 0 <= args.budget <= n:
        raise UsageError(f"--budget must lie in [0, {n}]")
    if args.repeat is not None and args.repeat < 1:
        raise UsageError("--repeat must be >= 1")
    order = tuple(range(n)) if args.order == "forward" else tuple(range(n - 1, -1, -1))
    cfg = RolloutConfig(
        stage_order=order,
        stage_budget=args.budget,
        max_repeat_iters=args.repeat or RolloutConfig.max_repeat_iters,
    )
    try:
        rep = solve(inst, args.method, bases=args.base, cfg=cfg, repeat=args.repeat is not None)
    except CapExceeded as exc:
        raise UsageError(str(exc)) from exc
    _emit(json.dumps(rep.to_dict(), indent=2) + "\n", args.out)
    log.info("%s: feasible=%s cost=%s lp_calls=%d", args.method, rep.feasible, rep.cost, rep.lp_calls)
    return EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_gen(args) -> int:
    try:
        cfg = harness.GenConfig(seed=args.seed, n=args.stations, frac=args.frac)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(serialize_instance(harness.generate_instance(cfg)) + "\n", args.out)
    return EXIT_OK


def _scenarios(config: dict):
    try:
        return harness.scenarios_from_config(config), config.get("methods", ["exact", "rollout"])
    except (KeyError, TypeError, ValueError, InstanceError) as exc:
        raise UsageError(f"bad config: {exc}") from exc


def _workers(args, config: dict) -> int:
    workers = args.workers if args.workers is not None else config.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise UsageError("workers must be a positive integer")
    return workers


def cmd_bench(args) -> int:
    config = _read_json(args.config)
    scenarios, methods = _scenarios(config)
    rows = harness.run_benchmark(scenarios, methods, csv_path=args.csv, workers=_workers(args, config))
    for agg in harness.aggregate(rows):
        log.info("N=%d feasible=%d AOG-RS=%s AOG-UB=%s", agg["n"], agg["feasible_rows"], agg["aog_rs"], agg["aog_ub"])
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _read_json(args.config)
    if "grid" not in config:
        raise UsageError("bad config: sweep needs a 'grid' mapping")
    scenarios, methods = _scenarios(config)
    try:
        harness.sensitivity_sweep(
            scenarios, config["grid"], methods, csv_path=args.csv, workers=_workers(args, config)
        )
    except (ValueError, InstanceError) as exc:
        raise UsageError(f"bad config: {exc}") from exc
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "gen": cmd_gen, "bench": cmd_bench, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InstanceError) as exc:
        parser.print_usage(sys.stderr)
        print(f"hoscharge {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LPError as exc:
        print(f"hoscharge {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
