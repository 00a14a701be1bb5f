"""Run the inversion benchmark and print the comparison table.

    python scripts/run_bench.py --reps 1000 --seed 7 --out bench.json
"""

import argparse
import json
import sys

from peakmap.bench import BenchConfig, run_benchmark


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", help="also write the JSON report here")
    args = ap.parse_args()

    def progress(k, n):
        if k % 50 == 0 or k == n:
            print(f"  {k}/{n}", file=sys.stderr, flush=True)

    report = run_benchmark(BenchConfig(n_reps=args.reps, seed=args.seed), progress)
    print(report.to_table())
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report.to_dict(include_replicates=True), fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
