"""Experiment protocols comparing sampling and completion schemes.

Three studies, each driven by a JSON experiment spec ("rfexp/1") and
emitting deterministic CSV files:

- recovery curve: reconstruction NSE per (method, rate, seed),
- localization CDF: per-query positioning errors and their empirical CDF
  per (method, query-noise level),
- budget search: minimal sampling rate at 1% granularity whose
  seed-averaged percentile error meets a target.

Methods are compared on identical draws: the truth map is deterministic
from the floor plan, survey noise and query sets derive from the cell
seed alone, and uniform methods share one sample stream.  Completed runs
are keyed by their cell and skipped when the output file already has
them, so interrupted sweeps resume; files are rewritten atomically in a
fixed cell order, which keeps byte-identical output for equal inputs.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .completion import (
    CompletionConfig,
    TubeSampleSet,
    complete_mc_facewise,
    complete_mc_flat,
    complete_tnn,
)
from .localize import (
    FingerprintDB,
    LocalizerConfig,
    build_db,
    empirical_cdf,
    kernel_locate,
    knn_locate,
    localization_error,
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

__all__ = [
    "EXP_FORMAT",
    "METHODS",
    "DIRECT_METHODS",
    "ExperimentSpec",
    "run_recovery_curve",
    "run_localization_cdf",
    "run_budget_search",
]

EXP_FORMAT = "rfexp/1"

# reconstruction methods complete a map first; direct methods localize
# against the raw samples
RECON_METHODS = (
    "uniform+tnn",
    "uniform+mc-face",
    "uniform+mc-flat",
    "adaptive-1/4",
    "adaptive-1/2",
)
DIRECT_METHODS = ("dl-uniform", "dl-adaptive")
METHODS = RECON_METHODS + DIRECT_METHODS

_ADAPTIVE_DELTA = {"adaptive-1/4": 0.25, "adaptive-1/2": 0.5, "dl-adaptive": 0.5}


@dataclass
class ExperimentSpec:
    """Resolved experiment description (see from_json for the file schema)."""

    plan: FloorPlan
    rates: tuple[float, ...]
    methods: tuple[str, ...]
    noise_dbm: tuple[float, ...]
    seeds: tuple[int, ...]
    query_count: int = 500
    rounds: int = 4
    locator: str = "knn"
    # None means: use the plan's own propagation parameters
    exponent: float | None = None
    ref_loss_db: float | None = None
    completion: CompletionConfig = field(default_factory=CompletionConfig)
    localizer: LocalizerConfig = field(default_factory=LocalizerConfig)

    def __post_init__(self):
        if not self.rates or not all(0 < r <= 1 for r in self.rates):
            raise ValueError("rates must be a non-empty list within (0, 1]")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if not self.methods:
            raise ValueError("need at least one method")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; known: {', '.join(METHODS)}")
        if self.locator not in ("knn", "kernel"):
            raise ValueError("locator must be 'knn' or 'kernel'")
        if self.query_count < 1:
            raise ValueError("query_count must be at least 1")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")

    @staticmethod
    def from_json(path: str | Path) -> "ExperimentSpec":
        path = Path(path)
        d = json.loads(path.read_text())
        if d.get("format") != EXP_FORMAT:
            raise ValueError(
                f"unsupported experiment format {d.get('format')!r}, "
                f"expected {EXP_FORMAT!r}"
            )
        scenario = d["scenario"]
        if scenario == "default":
            plan = default_plan()
        elif scenario == "budget":
            plan = budget_plan()
        elif isinstance(scenario, str):
            plan = FloorPlan.load(path.parent / scenario)
        else:
            plan = FloorPlan.from_dict(scenario)
        comp = CompletionConfig(**d.get("completion", {}))
        loc = LocalizerConfig(**d.get("localizer", {}))
        return ExperimentSpec(
            plan=plan,
            rates=tuple(float(r) for r in d["rates"]),
            methods=tuple(d["methods"]),
            noise_dbm=tuple(float(v) for v in d.get("noise_dbm", [0.0])),
            seeds=tuple(int(s) for s in d["seeds"]),
            query_count=int(d.get("query_count", 500)),
            rounds=int(d.get("rounds", 4)),
            locator=d.get("locator", "knn"),
            exponent=(float(d["exponent"]) if d.get("exponent") is not None else None),
            ref_loss_db=(
                float(d["ref_loss_db"]) if d.get("ref_loss_db") is not None else None
            ),
            completion=comp,
            localizer=loc,
        )

    def config_comment(self) -> str:
        d = {
            "plan": self.plan.to_dict(),
            "rates": list(self.rates),
            "methods": list(self.methods),
            "noise_dbm": list(self.noise_dbm),
            "seeds": list(self.seeds),
            "query_count": self.query_count,
            "rounds": self.rounds,
            "locator": self.locator,
            "exponent": self.exponent,
            "ref_loss_db": self.ref_loss_db,
            "completion": {
                "lam": self.completion.lam,
                "admm_rho": self.completion.admm_rho,
                "max_iters": self.completion.max_iters,
                "rel_tol": self.completion.rel_tol,
                "target_rank": self.completion.target_rank,
                "floor_dbm": self.completion.floor_dbm,
            },
            "localizer": {
                "k": self.localizer.k,
                "d0": self.localizer.d0,
                "h": self.localizer.h,
            },
        }
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def truth(self) -> np.ndarray:
        return gen_rss(self.plan, self.exponent, self.ref_loss_db)


def _flat_target_rank(spec: ExperimentSpec) -> int:
    if spec.completion.target_rank is not None:
        return spec.completion.target_rank
    return min(5, spec.plan.n3)


def _reconstruct(
    method: str,
    truth: np.ndarray,
    rate: float,
    seed: int,
    spec: ExperimentSpec,
    survey_sigma: float,
) -> tuple[np.ndarray | None, TubeSampleSet]:
    """Run one method at one rate; returns (estimate or None, samples).

    Direct-localization methods return None for the estimate: they consume
    the samples as-is.
    """
    n1, n2, _ = truth.shape
    budget = max(1, round(rate * n1 * n2))
    oracle = SimulatedOracle(truth, survey_sigma, seed)
    if method in ("uniform+tnn", "uniform+mc-face", "uniform+mc-flat", "dl-uniform"):
        samples = uniform_sample(oracle, budget, seed)
        if method == "uniform+tnn":
            return complete_tnn(samples, spec.completion)[0], samples
        if method == "uniform+mc-face":
            return complete_mc_facewise(samples, spec.completion)[0], samples
        if method == "uniform+mc-flat":
            cfg = replace(spec.completion, target_rank=_flat_target_rank(spec))
            return complete_mc_flat(samples, cfg)[0], samples
        return None, samples
    cfg = AdaptiveConfig(
        budget_m=budget,
        delta=_ADAPTIVE_DELTA[method],
        rounds_l=spec.rounds,
        seed=seed,
    )
    est, samples, _ = adaptive_complete(oracle, cfg)
    if method == "dl-adaptive":
        return None, samples
    return est, samples


def _write_csv_atomic(
    path: str | Path, comment: str, fields: list[str], rows: list[dict]
) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(f"# config: {comment}\n")
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    os.replace(tmp, path)


def _read_existing(path: str | Path, key_fields: list[str]) -> dict[tuple, dict]:
    """Rows already present in a (possibly partial) output file, by key."""
    path = Path(path)
    if not path.exists():
        return {}
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    out = {}
    for row in csv.DictReader(lines):
        out[tuple(row[k] for k in key_fields)] = row
    return out


def run_recovery_curve(spec: ExperimentSpec, out_path: str | Path) -> list[dict]:
    """NSE per (method, rate, seed); survey noise is noise_dbm[0].

    At rate 1.0 there are no unsampled tubes, so the NSE falls back to the
    whole-grid ratio instead of erroring out.
    """
    for m in spec.methods:
        if m in DIRECT_METHODS:
            raise ValueError(
                f"method {m!r} has no reconstruction; it cannot appear in a "
                f"recovery experiment"
            )
    sigma = spec.noise_dbm[0]
    truth = spec.truth()
    fields = ["method", "rate", "seed", "nse"]
    done = _read_existing(out_path, ["method", "rate", "seed"])
    rows = []
    for method in spec.methods:
        for rate in spec.rates:
            for seed in spec.seeds:
                key = (method, repr(float(rate)), repr(int(seed)))
                if key in done:
                    rows.append(done[key])
                    continue
                est, samples = _reconstruct(method, truth, rate, seed, spec, sigma)
                omega = samples if samples.count < truth.shape[0] * truth.shape[1] else None
                val = nse(truth, est, omega)
                rows.append(
                    {
                        "method": method,
                        "rate": repr(float(rate)),
                        "seed": repr(int(seed)),
                        "nse": repr(float(val)),
                    }
                )
    _write_csv_atomic(out_path, spec.config_comment(), fields, rows)
    return rows


def _query_set(
    truth: np.ndarray, spec: ExperimentSpec, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Query grid positions and their noise-free fingerprints plus unit
    noise (scaled by sigma at use site, so noise levels share draws)."""
    n1, n2, n3 = truth.shape
    if spec.query_count > n1 * n2:
        raise ValueError(
            f"query_count {spec.query_count} exceeds grid size {n1 * n2}"
        )
    flat = stream(seed, STREAM_QUERY).permutation(n1 * n2)[: spec.query_count]
    qi, qj = flat // n2, flat % n2
    prints = truth[qi, qj, :]
    unit = stream(seed, STREAM_QUERY_NOISE).standard_normal((spec.query_count, n3))
    return np.column_stack([qi, qj]), prints, unit


def _locate_all(
    db: FingerprintDB,
    plan: FloorPlan,
    positions: np.ndarray,
    prints: np.ndarray,
    spec: ExperimentSpec,
) -> list[tuple[float, float, float, float, float]]:
    locate = knn_locate if spec.locator == "knn" else kernel_locate
    out = []
    for (i, j), fp in zip(positions, prints):
        x, y = plan.point(int(i), int(j))
        xh, yh = locate(db, fp, spec.localizer)
        out.append((x, y, xh, yh, localization_error((x, y), (xh, yh))))
    return out


def run_localization_cdf(
    spec: ExperimentSpec,
    errors_path: str | Path,
    cdf_path: str | Path,
) -> list[dict]:
    """Positioning errors per (method, query-noise, seed) at rates[0].

    The survey itself is noise-free; noise_dbm lists query-noise levels.
    Emits one errors CSV (per query) and one CDF CSV pooled over seeds.
    """
    rate = spec.rates[0]
    truth = spec.truth()
    err_fields = ["method", "noise", "seed", "x", "y", "x_hat", "y_hat", "error_m"]
    done = _read_existing(errors_path, ["method", "noise", "seed"])
    # group rows per cell so a resumed run keeps whole cells
    cells: dict[tuple, list[dict]] = {}
    for key, row in done.items():
        cells.setdefault(key, []).append(row)
    err_rows: list[dict] = []
    for method in spec.methods:
        db_cache: dict[int, FingerprintDB] = {}
        for sigma in spec.noise_dbm:
            for seed in spec.seeds:
                key = (method, repr(float(sigma)), repr(int(seed)))
                if key in cells and len(cells[key]) == spec.query_count:
                    err_rows.extend(cells[key])
                    continue
                if seed not in db_cache:
                    est, samples = _reconstruct(method, truth, rate, seed, spec, 0.0)
                    if est is None:
                        db = build_db(None, spec.plan, subset=samples)
                    else:
                        db = build_db(est, spec.plan)
                    db_cache[seed] = db
                positions, prints, unit = _query_set(truth, spec, seed)
                located = _locate_all(
                    db_cache[seed], spec.plan, positions, prints + sigma * unit, spec
                )
                for x, y, xh, yh, em in located:
                    err_rows.append(
                        {
                            "method": method,
                            "noise": repr(float(sigma)),
                            "seed": repr(int(seed)),
                            "x": repr(x),
                            "y": repr(y),
                            "x_hat": repr(xh),
                            "y_hat": repr(yh),
                            "error_m": repr(em),
                        }
                    )
    _write_csv_atomic(errors_path, spec.config_comment(), err_fields, err_rows)
    cdf_rows = []
    for method in spec.methods:
        for sigma in spec.noise_dbm:
            pooled = [
                float(r["error_m"])
                for r in err_rows
                if r["method"] == method and float(r["noise"]) == sigma
            ]
            for thr, frac in empirical_cdf(np.array(pooled)):
                cdf_rows.append(
                    {
                        "method": method,
                        "noise": repr(float(sigma)),
                        "threshold_m": repr(thr),
                        "fraction": repr(frac),
                    }
                )
    _write_csv_atomic(
        cdf_path, spec.config_comment(),
        ["method", "noise", "threshold_m", "fraction"], cdf_rows,
    )
    return err_rows


def _percentile_error(
    method: str,
    truth: np.ndarray,
    rate: float,
    sigma: float,
    spec: ExperimentSpec,
    pct: float,
    cache: dict,
) -> float:
    """Mean over seeds of the pct-percentile localization error."""
    vals = []
    for seed in spec.seeds:
        key = (method, round(rate, 6), float(sigma), int(seed))
        if key not in cache:
            try:
                est, samples = _reconstruct(method, truth, rate, seed, spec, 0.0)
                if est is None:
                    db = build_db(None, spec.plan, subset=samples)
                else:
                    db = build_db(est, spec.plan)
                positions, prints, unit = _query_set(truth, spec, seed)
                located = _locate_all(
                    db, spec.plan, positions, prints + sigma * unit, spec
                )
            except ValueError as exc:
                # rate too low for the scheme (adaptive first pass infeasible,
                # or a direct-localization DB smaller than the neighbor
                # count): counts as a miss at this rate
                low_rate = (
                    "first pass infeasible" in str(exc)
                    or "exceeds database size" in str(exc)
                )
                if not low_rate:
                    raise
                cache[key] = np.inf
                vals.append(cache[key])
                continue
            cache[key] = float(
                np.percentile(np.array([e for *_rest, e in located]), pct)
            )
        vals.append(cache[key])
    return float(np.mean(vals))


def run_budget_search(
    spec: ExperimentSpec,
    target_error_m: float,
    target_percentile: float | tuple[float, float],
    out_path: str | Path,
) -> list[dict]:
    """Minimal sampling rate meeting the percentile error target.

    Bisects over whole-percent rates assuming error decreases with rate;
    a (lo, hi) percentile range is evaluated at its midpoint.  Methods
    that miss the target even at rate 1.0 report the sentinel -1.
    """
    if isinstance(target_percentile, tuple):
        pct = (target_percentile[0] + target_percentile[1]) / 2.0
    else:
        pct = float(target_percentile)
    if not 0 < pct < 100:
        raise ValueError("percentile must lie strictly between 0 and 100")
    if target_error_m <= 0:
        raise ValueError("target error must be positive")
    truth = spec.truth()
    done = _read_existing(out_path, ["method", "noise"])
    cache: dict = {}
    rows = []
    for method in spec.methods:
        for sigma in spec.noise_dbm:
            key = (method, repr(float(sigma)))
            if key in done:
                rows.append(done[key])
                continue
            if _percentile_error(method, truth, 1.0, sigma, spec, pct, cache) > target_error_m:
                min_rate = -1.0
            elif _percentile_error(method, truth, 0.01, sigma, spec, pct, cache) <= target_error_m:
                min_rate = 0.01
            else:
                lo, hi = 1, 100  # percent; metric(lo) > target, metric(hi) <= target
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if (
                        _percentile_error(
                            method, truth, mid / 100.0, sigma, spec, pct, cache
                        )
                        <= target_error_m
                    ):
                        hi = mid
                    else:
                        lo = mid
                min_rate = hi / 100.0
            rows.append(
                {
                    "method": method,
                    "noise": repr(float(sigma)),
                    "min_rate": repr(float(min_rate)),
                }
            )
    _write_csv_atomic(
        out_path, spec.config_comment(), ["method", "noise", "min_rate"], rows
    )
    return rows
