#!/usr/bin/env python3
"""Lock-in probability against Eb/N0 for every estimator.

Desk-scale trial counts by default; pass --paper-scale for the full runs.
Output CSV is the standard sweep schema, one row per (Eb/N0, method).
"""

import argparse

from zpsync import Method, SweepAxis, SweepSpec, SystemConfig, run_sweep, write_sweep_csv

METHODS = (
    Method.ML_EXHAUSTIVE,
    Method.ML_GOLDEN,
    Method.MCS_EXHAUSTIVE,
    Method.TRANSITION_METRIC,
    Method.GAUSSIAN_ML,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", default="0,2.5,5,7.5,10,12.5,15")
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--paper-scale", action="store_true")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", default="lockin_vs_ebn0.csv")
    args = ap.parse_args()

    trials = args.trials or (10_000 if args.paper_scale else 2000)
    spec = SweepSpec(
        axis=SweepAxis.EBN0,
        points=tuple(float(p) for p in args.points.split(",")),
        trials_per_point=trials,
        methods=METHODS,
        base=SystemConfig(),
        seed=args.seed,
    )
    summary = run_sweep(spec, workers=args.workers)
    write_sweep_csv(summary, args.out)
    for row in summary.rows:
        print(f"ebn0={row.axis_value:6.2f}  {row.method.value:12s}  lock_in={row.lock_in:.4f}  mse={row.mse:.4f}")
    print(f"-> {args.out}")


if __name__ == "__main__":
    main()
