"""Correct classification ratios of BS0 and BS2 across designs.

    python scripts/table2.py --reps 200 --jobs 8
"""

import argparse
import sys

from netform.simulation import DgpConfig, run_monte_carlo


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r", type=float, nargs="+", default=[0.4, 0.7, 1.0])
    p.add_argument("--n", type=int, nargs="+", default=[54, 75])
    args = p.parse_args(argv)

    print("r,n,estimator,sender,receiver,failures")
    for r in args.r:
        for n in args.n:
            s = run_monte_carlo(DgpConfig(n=n, r=r, seed=args.seed), args.reps, ["BS0", "BS2"], n_jobs=args.jobs)
            for m in ("BS0", "BS2"):
                snd, rcv = s.classification[m]
                print(f"{r},{n},{m},{snd:.3f},{rcv:.3f},{s.failures[m]}", flush=True)


if __name__ == "__main__":
    main()
