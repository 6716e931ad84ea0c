"""Command-line entry point: ``defeed run | bench | report | calibrate``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import bench
from .export import write_logs
from .gas import CalibrationError, CalibrationTargets, calibrate, gas_to_usd
from .protocol import INFINITE
from .timing import JITTER

SEED_ENV = "DEFEED_SEED"


def _seed(args) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise SystemExit(f"error: {SEED_ENV} must be an integer, got {env!r}") from None
    return args.seed


def _counts(text: str) -> list[int]:
    try:
        counts = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not counts or min(counts) < 1:
        raise argparse.ArgumentTypeError("requester counts must be positive")
    return counts


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", type=Path, help="INI scenario file, one [section] per scenario")
    p.add_argument("--mode", choices=bench.MODES, help="request pattern to run")
    p.add_argument("--requesters", type=_counts, help="requester count, or a comma-separated list")
    p.add_argument("--seed", type=int, default=0, help=f"scenario seed ({SEED_ENV} overrides)")
    p.add_argument("--window-blocks", type=int, default=3, help="pool window length in blocks")
    p.add_argument("--ttl-blocks", type=int, default=INFINITE, help="cache entry lifetime in blocks, -1 for none")
    p.add_argument("--jitter", action="store_true", help="use the missed-slot block interval model")
    p.add_argument("--out", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="defeed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run scenarios and write their gas curve and logs")
    _add_common(run)

    b = sub.add_parser("bench", help="gas sweep over modes and requester counts, plus throughput")
    _add_common(b)
    b.add_argument("--trials", type=int, default=15, help="throughput trials per mode")
    b.add_argument("--operations", type=int, default=20, help="sequential operations per throughput trial")
    b.add_argument("--workers", type=int, default=1, help="worker processes for independent scenarios")
    b.add_argument("--no-throughput", action="store_true", help="skip the throughput runs")

    rep = sub.add_parser("report", help="summarize a gas-curve CSV")
    rep.add_argument("csv", type=Path, help="gas_curve.csv produced by run or bench")
    rep.add_argument("--out", type=Path, help="directory to rewrite gas_curve.csv and summary.txt into")

    cal = sub.add_parser("calibrate", help="solve the gas schedule and check the cost table")
    cal.add_argument("--out", type=Path, help="directory to write schedule.json into")
    return parser


def _specs(args, seed: int) -> list[bench.ScenarioSpec]:
    if args.scenario is not None:
        specs = bench.load_scenarios(args.scenario)
        if os.environ.get(SEED_ENV):
            specs = [replace(s, seed=seed) for s in specs]
        return specs
    modes = [args.mode] if args.mode else (["defeed"] if args.command == "run" else ["defeed", "pool", "cache"])
    counts = args.requesters or ([1] if args.command == "run" else list(bench.PAPER_COUNTS))
    return [bench.ScenarioSpec(f"{m}-{n}", m, n, seed, args.jitter, args.window_blocks, args.ttl_blocks)
            for m in modes for n in counts]


def cmd_run(args) -> int:
    seed = _seed(args)
    specs = _specs(args, seed)
    results = []
    for spec in specs:
        result, world = bench.execute_scenario(spec)
        results.append(result)
        if args.out:
            write_logs(world, args.out / spec.name)
        print(f"{spec.name}: mode={spec.mode} n={spec.requesters} gas={result.total_gas} "
              f"usd={result.total_usd:.2f} txs={result.transactions} stateRoot=0x{result.state_root}")
    rows = bench.gas_curve(results)
    if args.out:
        bench.report(rows, args.out)
    print(bench.summary_text(rows), end="")
    return 0


def cmd_bench(args) -> int:
    seed = _seed(args)
    specs = _specs(args, seed)
    results = bench.run_many(specs, workers=args.workers)
    rows = bench.gas_curve(results)
    print(bench.summary_text(rows), end="")
    reports = []
    if not args.no_throughput:
        for mode in ("pool", "cache", "subscribe", "update"):
            # throughput always runs on the jittered interval model; --jitter only affects the gas sweep
            reports.append(bench.run_throughput(mode, args.trials, args.operations, seed, JITTER))
        print(bench.throughput_csv(reports), end="")
    if args.out:
        bench.report(rows, args.out)
        if reports:
            (args.out / "throughput.csv").write_text(bench.throughput_csv(reports))
    return 0


def cmd_report(args) -> int:
    try:
        rows = bench.rows_from_csv(args.csv.read_text())
    except OSError as exc:
        raise SystemExit(f"error: cannot read {args.csv}: {exc.strerror or exc}") from None
    if not rows:
        raise SystemExit(f"error: {args.csv} has no rows")
    if args.out:
        bench.report(rows, args.out)
    print(bench.summary_text(rows), end="")
    return 0


def cmd_calibrate(args) -> int:
    try:
        schedule = calibrate(CalibrationTargets())
    except CalibrationError as exc:
        raise SystemExit(f"error: {exc}") from None
    print(f"{'operation':<20}{'gas':>10}{'USD':>8}{'reference':>11}{'refUSD':>8}")
    for row in bench.measure_table1(schedule):
        print(f"{row.operation:<20}{row.gas:>10}{row.usd:>8.2f}{row.reference_gas:>11}{row.reference_usd:>8.2f}")
    first, normal = bench.single_request_gas(schedule)
    print(f"single request end to end: {first} gas (${gas_to_usd(first):.2f}); direct call: {normal} gas")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "schedule.json").write_text(json.dumps(schedule.as_dict(), indent=2, sort_keys=True) + "\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": cmd_run, "bench": cmd_bench, "report": cmd_report, "calibrate": cmd_calibrate}
    try:
        return handlers[args.command](args)
    except bench.ScenarioError as exc:
        parser.exit(2, f"error: {exc}\n")
    except OSError as exc:
        parser.exit(1, f"error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
