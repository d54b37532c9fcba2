"""Bias and RMSE of the common parameters across designs.

    python scripts/table1.py --reps 200 --jobs 8 --out results/table1.csv
"""

import argparse
import csv
import sys

from netform.io import mc_rows
from netform.simulation import ESTIMATORS, DgpConfig, run_monte_carlo


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r", type=float, nargs="+", default=[0.4, 0.7, 1.0])
    p.add_argument("--n", type=int, nargs="+", default=[54, 75])
    p.add_argument("--out", default=None, help="CSV path; stdout if omitted")
    args = p.parse_args(argv)

    rows, header = [], None
    for r in args.r:
        for n in args.n:
            s = run_monte_carlo(DgpConfig(n=n, r=r, seed=args.seed), args.reps, ESTIMATORS, n_jobs=args.jobs)
            header, body = mc_rows(s)
            rows += [[r, n, *row] for row in body]
            print(f"r={r} n={n} done in {s.elapsed:.0f}s", file=sys.stderr)

    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["r", "n", *header])
    for row in rows:
        w.writerow(row[:2] + [f"{c:.4f}" if isinstance(c, float) else c for c in row[2:]])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
