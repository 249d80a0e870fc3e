#!/usr/bin/env python3
"""Positioning-error CDFs from maps rebuilt at a fixed sampling rate.

Surveys the default scenario at 20% sampling, rebuilds the fingerprint
database per method, and localizes noisy queries; emits per-query errors
and the pooled CDF per (method, query-noise) pair.
"""

import argparse

from rfmap.experiments import ExperimentSpec, run_localization_cdf
from rfmap.simulate import budget_plan, default_plan


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rate", type=float, default=0.2)
    ap.add_argument("--methods", nargs="+",
                    default=["adaptive-1/2", "uniform+tnn", "dl-uniform"])
    ap.add_argument("--noise-dbm", type=float, nargs="+", default=[3.0],
                    help="query noise levels")
    ap.add_argument("--seeds", type=int, nargs="+", default=list(range(10)))
    ap.add_argument("--query-count", type=int, default=500)
    ap.add_argument("--locator", choices=["knn", "kernel"], default="knn")
    ap.add_argument("--scenario", choices=["default", "budget"],
                    default="default")
    ap.add_argument("--out-errors", default="localization_errors.csv")
    ap.add_argument("--out-cdf", default="localization_cdf.csv")
    args = ap.parse_args()

    plan = default_plan() if args.scenario == "default" else budget_plan()
    spec = ExperimentSpec(
        plan=plan,
        rates=(args.rate,),
        methods=tuple(args.methods),
        noise_dbm=tuple(args.noise_dbm),
        seeds=tuple(args.seeds),
        query_count=args.query_count,
        locator=args.locator,
    )
    rows = run_localization_cdf(spec, args.out_errors, args.out_cdf)
    print(f"wrote {len(rows)} error rows to {args.out_errors} "
          f"and the pooled CDF to {args.out_cdf}")


if __name__ == "__main__":
    main()
