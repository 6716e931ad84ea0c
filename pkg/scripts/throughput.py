"""Sequential-submission throughput and latency per mode on the jittered block-interval model."""

import argparse
import statistics
from pathlib import Path

from defeed.bench import THROUGHPUT_MODES, run_throughput, throughput_csv
from defeed.timing import FIXED, JITTER


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--modes", default=",".join(THROUGHPUT_MODES))
    parser.add_argument("--trials", type=int, default=15)
    parser.add_argument("--operations", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--fixed", action="store_true", help="use fixed 12 s blocks instead of missed slots")
    parser.add_argument("--out", type=Path)
    args = parser.parse_args()

    interval = FIXED if args.fixed else JITTER
    reports = [run_throughput(m, args.trials, args.operations, args.seed, interval) for m in args.modes.split(",")]
    text = throughput_csv(reports)
    print(text, end="")
    gas = [g for r in reports for g in r.gas]
    print(f"mean gas per transaction across modes: {statistics.fmean(gas):.0f}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "throughput.csv").write_text(text)


if __name__ == "__main__":
    main()
