"""Sweep requester counts for each mode and write the gas-curve CSV and summary."""

import argparse
from pathlib import Path

from defeed.bench import PAPER_COUNTS, report, sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--modes", default="defeed,pool,cache,normal")
    parser.add_argument("--counts", default=",".join(map(str, PAPER_COUNTS)))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jitter", action="store_true")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", type=Path, default=Path("results/gas_curves"))
    args = parser.parse_args()

    rows = sweep(args.modes.split(","), [int(n) for n in args.counts.split(",")], seed=args.seed,
                 jitter=args.jitter, workers=args.workers)
    csv_path, summary = report(rows, args.out)
    print(summary, end="")
    print(f"wrote {csv_path}")


if __name__ == "__main__":
    main()
