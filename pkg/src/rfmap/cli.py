"""Command-line interface: generate, sample, complete, localize, evaluate.

Exit codes: 0 on success, 1 on usage or input errors, 2 on numeric
failure inside a solver.  Stochastic subcommands require --seed so every
run is reproducible.

Typical pipeline:

    rfmap gen --default-scenario --out truth.t3b --save-plan plan.json
    rfmap sample --map truth.t3b --rate 0.3 --mode adaptive --seed 7 \
        --out s.smp --est est.t3b --report run.txt
    rfmap complete --samples s.smp --method tnn --out tnn.t3b
    rfmap localize --db-map tnn.t3b --plan plan.json --truth truth.t3b \
        --query-count 200 --query-noise 3 --seed 1 --out errors.csv
    rfmap eval cdf --errors errors.csv --out cdf.csv
    rfmap eval nse --truth truth.t3b --est tnn.t3b --samples s.smp
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .completion import (
    CompletionConfig,
    complete_mc_facewise,
    complete_mc_flat,
    complete_tnn,
)
from .experiments import (
    ExperimentSpec,
    run_budget_search,
    run_localization_cdf,
    run_recovery_curve,
)
from .formats import read_smp, read_t3b, write_smp, write_t3b
from .localize import (
    LocalizerConfig,
    build_db,
    empirical_cdf,
    kernel_locate,
    knn_locate,
    localization_error,
    read_errors_csv,
)
from .sampling import (
    STREAM_QUERY,
    STREAM_QUERY_NOISE,
    AdaptiveConfig,
    SimulatedOracle,
    adaptive_complete,
    stream,
    uniform_sample,
)
from .simulate import FloorPlan, budget_plan, default_plan, gen_rss, nse
from .tensor_core import NumericError

__all__ = ["cli_main", "main"]


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(
        prog="rfmap",
        description="RF fingerprint map sampling, completion and localization",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    g = sub.add_parser("gen", help="generate a noise-free map from a floor plan",
                       formatter_class=fmt)
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--plan", help="rfplan/1 JSON file")
    src.add_argument("--default-scenario", action="store_true",
                     help="use the built-in 60x80 grid, 10 AP, 6 wall scenario")
    src.add_argument("--budget-scenario", action="store_true",
                     help="use the built-in 36x12 coarse-cell, 30 AP scenario")
    g.add_argument("--exponent", type=float, default=None,
                   help="path-loss exponent (default: the plan's value)")
    g.add_argument("--ref-loss", type=float, default=None,
                   help="loss at 1 m in dB (default: the plan's value)")
    g.add_argument("--out", required=True, help="output map (.t3b)")
    g.add_argument("--save-plan", help="also write the plan used (JSON)")

    s = sub.add_parser("sample", help="draw tube samples from a map",
                       formatter_class=fmt)
    s.add_argument("--map", required=True, help="ground-truth map (.t3b)")
    amt = s.add_mutually_exclusive_group(required=True)
    amt.add_argument("--rate", type=float, help="fraction of tubes to sample")
    amt.add_argument("--count", type=int, help="number of tubes to sample")
    s.add_argument("--mode", choices=("uniform", "adaptive"), default="uniform")
    s.add_argument("--delta", type=float, default=0.5,
                   help="adaptive: uniform-pass budget fraction")
    s.add_argument("--rounds", type=int, default=4, help="adaptive: rounds")
    s.add_argument("--rank-cap", type=int, default=None,
                   help="adaptive: subspace dimension cap")
    s.add_argument("--noise-dbm", type=float, default=0.0, help="survey noise sigma")
    s.add_argument("--seed", type=int, required=True, help="RNG seed")
    s.add_argument("--out", required=True, help="output samples (.smp)")
    s.add_argument("--est", help="adaptive: also write the subspace estimate (.t3b)")
    s.add_argument("--report", help="adaptive: write the run report (text)")

    c = sub.add_parser("complete", help="complete a map from tube samples",
                       formatter_class=fmt)
    c.add_argument("--samples", required=True, help="input samples (.smp)")
    c.add_argument("--method", choices=("tnn", "mc-face", "mc-flat"), default="tnn")
    c.add_argument("--lam", type=float, default=None,
                   help="fit/nuclear trade-off (default: scale rule)")
    c.add_argument("--rho", type=float, default=1.0, help="ADMM penalty")
    c.add_argument("--max-iters", type=int, default=500)
    c.add_argument("--rel-tol", type=float, default=1e-6)
    c.add_argument("--rank", type=int, default=None, help="mc-flat factor rank")
    c.add_argument("--no-floor", action="store_true",
                   help="skip the -110 dBm clamp (synthetic data)")
    c.add_argument("--out", required=True, help="output map (.t3b)")

    l = sub.add_parser("localize", help="locate noisy queries against a map",
                       formatter_class=fmt)
    l.add_argument("--db-map", help="reconstructed map for the database (.t3b)")
    l.add_argument("--db-samples", help="build the database from samples (.smp)")
    l.add_argument("--plan", required=True, help="floor plan (rfplan/1 JSON)")
    l.add_argument("--method", choices=("knn", "kernel"), default="knn")
    l.add_argument("--k", type=int, default=5, help="knn neighbor count")
    l.add_argument("--d0", type=float, default=0.01, help="weight offset (dBm)")
    l.add_argument("--kernel-h", type=int, default=50, help="kernel neighbor count")
    l.add_argument("--queries", help="query CSV: x,y,rss_1..rss_n")
    l.add_argument("--truth", help="draw queries from this map (.t3b)")
    l.add_argument("--query-count", type=int, default=500,
                   help="with --truth: number of queries")
    l.add_argument("--query-noise", type=float, default=0.0,
                   help="with --truth: query noise sigma (dBm)")
    l.add_argument("--seed", type=int, help="required with --truth")
    l.add_argument("--out", required=True, help="errors CSV")

    e = sub.add_parser("eval", help="evaluate reconstructions and error files",
                       formatter_class=fmt)
    esub = e.add_subparsers(dest="eval_command", required=True)
    en = esub.add_parser("nse", help="normalized squared error over unsampled tubes",
                         formatter_class=fmt)
    en.add_argument("--truth", required=True, help="ground truth (.t3b)")
    en.add_argument("--est", required=True, help="estimate (.t3b)")
    en.add_argument("--samples", help="sample set defining the unsampled tubes (.smp)")
    ec = esub.add_parser("cdf", help="empirical CDF of an errors CSV",
                         formatter_class=fmt)
    ec.add_argument("--errors", required=True, help="errors CSV from localize")
    ec.add_argument("--out", required=True, help="CDF CSV (threshold_m,fraction)")

    x = sub.add_parser("experiment", help="run a full study from an rfexp/1 spec",
                       formatter_class=fmt)
    xsub = x.add_subparsers(dest="experiment_command", required=True)
    xr = xsub.add_parser("recovery", help="NSE vs sampling rate",
                         formatter_class=fmt)
    xr.add_argument("--spec", required=True, help="rfexp/1 JSON")
    xr.add_argument("--out", required=True, help="CSV: method,rate,seed,nse")
    xc = xsub.add_parser("cdf", help="localization error CDFs", formatter_class=fmt)
    xc.add_argument("--spec", required=True, help="rfexp/1 JSON")
    xc.add_argument("--out-errors", required=True, help="per-query errors CSV")
    xc.add_argument("--out-cdf", required=True, help="CDF CSV")
    xb = xsub.add_parser("budget", help="minimal rate meeting an error target",
                         formatter_class=fmt)
    xb.add_argument("--spec", required=True, help="rfexp/1 JSON")
    xb.add_argument("--target-m", type=float, required=True,
                    help="target percentile error in meters")
    xb.add_argument("--percentile", type=float, default=95.0)
    xb.add_argument("--out", required=True, help="CSV: method,noise,min_rate")
    return p


def _cmd_gen(args) -> int:
    if args.default_scenario:
        plan = default_plan()
    elif args.budget_scenario:
        plan = budget_plan()
    else:
        plan = FloorPlan.load(args.plan)
    t = gen_rss(plan, args.exponent, args.ref_loss)
    write_t3b(args.out, t)
    if args.save_plan:
        plan.save(args.save_plan)
    print(f"wrote {t.shape[0]}x{t.shape[1]}x{t.shape[2]} map to {args.out}")
    return 0


def _cmd_sample(args) -> int:
    truth = read_t3b(args.map)
    n1, n2, _ = truth.shape
    budget = args.count if args.count is not None else max(1, round(args.rate * n1 * n2))
    if not 1 <= budget <= n1 * n2:
        raise ValueError(f"budget {budget} outside 1..{n1 * n2}")
    oracle = SimulatedOracle(truth, args.noise_dbm, args.seed)
    if args.mode == "uniform":
        samples = uniform_sample(oracle, budget, args.seed)
        if args.est or args.report:
            raise ValueError("--est/--report apply to adaptive sampling only")
    else:
        cfg = AdaptiveConfig(
            budget_m=budget, delta=args.delta, rounds_l=args.rounds,
            seed=args.seed, rank_cap=args.rank_cap,
        )
        est, samples, report = adaptive_complete(oracle, cfg)
        if args.est:
            write_t3b(args.est, est)
        if args.report:
            report.save(args.report)
    write_smp(args.out, samples)
    print(f"wrote {samples.count} tubes to {args.out}")
    return 0


def _cmd_complete(args) -> int:
    samples = read_smp(args.samples)
    cfg = CompletionConfig(
        lam=args.lam, admm_rho=args.rho, max_iters=args.max_iters,
        rel_tol=args.rel_tol, target_rank=args.rank,
        floor_dbm=None if args.no_floor else -110.0,
    )
    if args.method == "tnn":
        est, report = complete_tnn(samples, cfg)
    elif args.method == "mc-face":
        est, report = complete_mc_facewise(samples, cfg)
    else:
        if cfg.target_rank is None:
            raise ValueError("--rank is required for mc-flat")
        est, report = complete_mc_flat(samples, cfg)
    write_t3b(args.out, est)
    status = "converged" if report.converged else "max-iters"
    print(
        f"wrote {args.out} ({status} after {report.iterations} iterations, "
        f"objective {report.objective:.6g})"
    )
    return 0


def _load_queries_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    if len(header) < 3 or header[0] != "x" or header[1] != "y":
        raise ValueError(f"{path}: expected header x,y,rss_1..rss_n")
    coords, prints = [], []
    for row in reader:
        if not row:
            continue
        coords.append([float(row[0]), float(row[1])])
        prints.append([float(v) for v in row[2:]])
    if not coords:
        raise ValueError(f"{path}: no query rows")
    return np.array(coords), np.array(prints)


def _cmd_localize(args) -> int:
    plan = FloorPlan.load(args.plan)
    if (args.db_map is None) == (args.db_samples is None):
        raise ValueError("give exactly one of --db-map or --db-samples")
    if args.db_map:
        db = build_db(read_t3b(args.db_map), plan)
    else:
        db = build_db(None, plan, subset=read_smp(args.db_samples))
    if (args.queries is None) == (args.truth is None):
        raise ValueError("give exactly one of --queries or --truth")
    if args.queries:
        coords, prints = _load_queries_csv(args.queries)
    else:
        if args.seed is None:
            raise ValueError("--seed is required when drawing queries from --truth")
        truth = read_t3b(args.truth)
        n1, n2, n3 = truth.shape
        count = args.query_count
        if not 1 <= count <= n1 * n2:
            raise ValueError(f"query count {count} outside 1..{n1 * n2}")
        flat = stream(args.seed, STREAM_QUERY).permutation(n1 * n2)[:count]
        qi, qj = flat // n2, flat % n2
        coords = np.array([plan.point(int(i), int(j)) for i, j in zip(qi, qj)])
        prints = truth[qi, qj, :]
        if args.query_noise > 0:
            prints = prints + stream(args.seed, STREAM_QUERY_NOISE).normal(
                0.0, args.query_noise, prints.shape
            )
    cfg = LocalizerConfig(k=args.k, d0=args.d0, h=args.kernel_h)
    locate = knn_locate if args.method == "knn" else kernel_locate
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "x_hat", "y_hat", "error_m"])
        errs = []
        for (x, y), fp in zip(coords, prints):
            xh, yh = locate(db, fp, cfg)
            em = localization_error((x, y), (xh, yh))
            errs.append(em)
            writer.writerow([repr(float(x)), repr(float(y)),
                             repr(float(xh)), repr(float(yh)), repr(float(em))])
    print(
        f"localized {len(errs)} queries; median error "
        f"{float(np.median(errs)):.3f} m -> {args.out}"
    )
    return 0


def _cmd_eval(args) -> int:
    if args.eval_command == "nse":
        truth = read_t3b(args.truth)
        est = read_t3b(args.est)
        omega = read_smp(args.samples) if args.samples else None
        print(repr(nse(truth, est, omega)))
        return 0
    rows = read_errors_csv(args.errors)
    if not rows:
        raise ValueError(f"{args.errors}: no error rows")
    errors = np.array([float(r["error_m"]) for r in rows])
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold_m", "fraction"])
        for thr, frac in empirical_cdf(errors):
            writer.writerow([repr(thr), repr(frac)])
    print(f"wrote CDF ({len(errors)} errors) to {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    spec = ExperimentSpec.from_json(args.spec)
    if args.experiment_command == "recovery":
        rows = run_recovery_curve(spec, args.out)
        print(f"wrote {len(rows)} recovery rows to {args.out}")
    elif args.experiment_command == "cdf":
        rows = run_localization_cdf(spec, args.out_errors, args.out_cdf)
        print(f"wrote {len(rows)} error rows to {args.out_errors}")
    else:
        rows = run_budget_search(spec, args.target_m, args.percentile, args.out)
        print(f"wrote {len(rows)} budget rows to {args.out}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "sample": _cmd_sample,
    "complete": _cmd_complete,
    "localize": _cmd_localize,
    "eval": _cmd_eval,
    "experiment": _cmd_experiment,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        # argparse --help exits 0; usage errors come through as code 1
        return int(exc.code or 0)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
