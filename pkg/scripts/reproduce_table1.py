"""Print the per-operation cost table measured from simulated receipts next to the reference figures."""

import argparse

from defeed.bench import measure_table1, single_request_gas
from defeed.gas import gas_to_usd


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    print(f"{'operation':<20}{'gas':>10}{'USD':>8}{'ref gas':>10}{'ref USD':>9}  match")
    for row in measure_table1(seed=args.seed):
        match = "yes" if row.gas == row.reference_gas and abs(row.usd - row.reference_usd) <= 0.02 else "NO"
        print(f"{row.operation:<20}{row.gas:>10}{row.usd:>8.3f}{row.reference_gas:>10}{row.reference_usd:>9.2f}  {match}")
    first, normal = single_request_gas()
    print(f"\nfirst request end to end: {first} gas (${gas_to_usd(first):.2f})")
    print(f"direct owner call:        {normal} gas (${gas_to_usd(normal):.2f})")


if __name__ == "__main__":
    main()
