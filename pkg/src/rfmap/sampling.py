"""Two-pass adaptive tube sampling with subspace-based map estimation.

Pass one spreads a fraction delta of the tube budget uniformly: m rows in
every column of the grid.  Pass two spends the remainder over L rounds;
each round scores the not-yet-chosen columns by how much of their sampled
energy falls outside the current column subspace, draws s columns by
those scores, measures them fully, and grows the subspace with the
orthonormalized residual of the new block.  Every column is finally
estimated by least squares through the learned subspace restricted to
its sampled rows.

All randomness flows through counter-based Philox streams derived as
stream(seed, purpose, index), so draws are reproducible and independent
of evaluation order and thread count:

    stream(seed, STREAM_FIRST_PASS, j)   row draw for column j, pass one
    stream(seed, STREAM_SECOND_PASS, l)  column draw for round l, pass two
    stream(seed, STREAM_NOISE)           measurement-noise field
    stream(seed, STREAM_UNIFORM)         one-shot uniform tube sampling
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .completion import TubeSampleSet
from .tensor_core import (
    RCOND_SINGULAR,
    REG_EPS,
    RegularizedInverseWarning,
    _check3,
    tproj,
    tsvd,
)

__all__ = [
    "STREAM_FIRST_PASS",
    "STREAM_SECOND_PASS",
    "STREAM_NOISE",
    "STREAM_UNIFORM",
    "stream",
    "MeasurementOracle",
    "SimulatedOracle",
    "AdaptiveConfig",
    "SubspaceEstimate",
    "RunReport",
    "UnderdeterminedError",
    "pass_budgets",
    "first_pass",
    "estimate_column_probs",
    "second_pass",
    "estimate_lateral_slice",
    "adaptive_complete",
    "prob_estimate_quality",
    "uniform_sample",
    "ProbQuality",
]

STREAM_FIRST_PASS = 0
STREAM_SECOND_PASS = 1
STREAM_NOISE = 2
STREAM_UNIFORM = 3
STREAM_QUERY = 4
STREAM_QUERY_NOISE = 5

# New subspace directions are kept only if their captured energy exceeds
# this fraction of the measured block norm; filters pure roundoff residue.
DIRECTION_DROP_REL = 1e-9


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent Philox (counter-based, 64-bit) stream for (seed, path)."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(path)))
    )


class UnderdeterminedError(ValueError):
    """A column has fewer sampled rows than the subspace dimension."""


class MeasurementOracle(Protocol):
    """Source of tube measurements with idempotent per-position cost."""

    n1: int
    n2: int
    n3: int

    def query(self, i: int, j: int) -> np.ndarray: ...

    @property
    def cost(self) -> int: ...


class SimulatedOracle:
    """Oracle over a ground-truth map with optional Gaussian survey noise.

    The noise field is pre-drawn from stream(seed, STREAM_NOISE), so a
    position measures the same value no matter when or how often it is
    queried; cost counts distinct positions only.  Measurements are clamped
    at floor_dbm (None disables).
    """

    def __init__(
        self,
        truth: np.ndarray,
        sigma_dbm: float = 0.0,
        seed: int = 0,
        floor_dbm: float | None = -110.0,
    ):
        self.truth = _check3(truth, "truth map")
        self.n1, self.n2, self.n3 = self.truth.shape
        if sigma_dbm < 0:
            raise ValueError("noise sigma must be non-negative")
        self.sigma_dbm = float(sigma_dbm)
        self.floor_dbm = floor_dbm
        if sigma_dbm > 0:
            self._noise = stream(seed, STREAM_NOISE).normal(
                0.0, sigma_dbm, self.truth.shape
            )
        else:
            self._noise = None
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    def query(self, i: int, j: int) -> np.ndarray:
        if not (0 <= i < self.n1 and 0 <= j < self.n2):
            raise IndexError(f"position ({i}, {j}) outside {self.n1}x{self.n2} grid")
        key = (int(i), int(j))
        tube = self._cache.get(key)
        if tube is None:
            tube = self.truth[i, j, :].copy()
            if self._noise is not None:
                tube = tube + self._noise[i, j, :]
            if self.floor_dbm is not None:
                tube = np.maximum(tube, self.floor_dbm)
            self._cache[key] = tube
        return tube.copy()

    @property
    def cost(self) -> int:
        return len(self._cache)


@dataclass
class AdaptiveConfig:
    """Budget and schedule for the two-pass sampler.

    budget_m is the total tube budget M; delta the uniform-pass fraction
    (delta=1 degenerates to a single uniform pass); rounds_l the number of
    adaptive rounds; rank_cap bounds the subspace dimension (None means
    min(n1, rounds_l*s), i.e. no cap beyond natural growth).
    """

    budget_m: int
    delta: float = 0.5
    rounds_l: int = 4
    seed: int = 0
    rank_cap: int | None = None
    floor_dbm: float | None = -110.0

    def __post_init__(self):
        if self.budget_m < 1:
            raise ValueError("budget_m must be at least 1")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if self.rounds_l < 1:
            raise ValueError("rounds_l must be at least 1")
        if self.rank_cap is not None and self.rank_cap < 1:
            raise ValueError("rank_cap must be at least 1")


@dataclass
class SubspaceEstimate:
    """Learned column subspace: t-orthonormal basis plus per-direction energy."""

    basis: np.ndarray  # (n1, dim, n3)
    energies: np.ndarray  # (dim,) captured residual energy per direction

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])

    @staticmethod
    def empty(n1: int, n3: int) -> "SubspaceEstimate":
        return SubspaceEstimate(
            basis=np.zeros((n1, 0, n3)), energies=np.zeros(0)
        )


@dataclass
class RunReport:
    """Cost accounting and diagnostics of one adaptive run."""

    cost_tubes: int
    rounds: int
    subspace_dim: int
    round_residuals: list[float] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        resid = ",".join(repr(float(v)) for v in self.round_residuals)
        return (
            f"cost_tubes={self.cost_tubes}\n"
            f"rounds={self.rounds}\n"
            f"subspace_dim={self.subspace_dim}\n"
            f"round_residuals={resid}\n"
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @staticmethod
    def load(path: str | Path) -> "RunReport":
        kv: dict[str, str] = {}
        for line in Path(path).read_text().splitlines():
            if line.strip():
                key, _, value = line.partition("=")
                kv[key.strip()] = value.strip()
        resid = [float(v) for v in kv["round_residuals"].split(",") if v]
        return RunReport(
            cost_tubes=int(kv["cost_tubes"]),
            rounds=int(kv["rounds"]),
            subspace_dim=int(kv["subspace_dim"]),
            round_residuals=resid,
        )


def pass_budgets(n1: int, n2: int, cfg: AdaptiveConfig) -> tuple[int, int]:
    """Per-column first-pass rows m and per-round column count s.

    m = floor(delta*M/n2); s = max(1, floor((1-delta)*M / ((n1-m)*L))),
    counting only the n1-m genuinely new tubes of a fully sampled column.
    s = 0 signals that the first pass already covers every row.
    """
    if cfg.budget_m > n1 * n2:
        raise ValueError(f"budget {cfg.budget_m} exceeds grid size {n1 * n2}")
    # tiny epsilon absorbs binary representation error of delta (e.g. 0.3*M)
    m = int(np.floor(cfg.delta * cfg.budget_m / n2 + 1e-9))
    if m < 1:
        raise ValueError(
            f"first pass infeasible: delta*M/n2 = "
            f"{cfg.delta * cfg.budget_m / n2:.3f} < 1; increase the budget"
        )
    m = min(m, n1)
    if m >= n1:
        return m, 0
    s = int(np.floor((1.0 - cfg.delta) * cfg.budget_m / ((n1 - m) * cfg.rounds_l) + 1e-9))
    return m, max(1, s)


def first_pass(oracle: MeasurementOracle, cfg: AdaptiveConfig) -> TubeSampleSet:
    """Uniformly measure m distinct rows in every column of the grid."""
    n1, n2, n3 = oracle.n1, oracle.n2, oracle.n3
    m, _ = pass_budgets(n1, n2, cfg)
    rows = np.empty(m * n2, dtype=np.int64)
    cols = np.empty(m * n2, dtype=np.int64)
    tubes = np.empty((m * n2, n3))
    for j in range(n2):
        rj = np.sort(stream(cfg.seed, STREAM_FIRST_PASS, j).permutation(n1)[:m])
        sl = slice(j * m, (j + 1) * m)
        rows[sl] = rj
        cols[sl] = j
        tubes[sl] = [oracle.query(int(i), j) for i in rj]
    return TubeSampleSet(n1=n1, n2=n2, n3=n3, rows=rows, cols=cols, tubes=tubes)


def _columns_of(samples: TubeSampleSet) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Map column j -> (row indices, (m_j, n3) tubes)."""
    out: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for j in np.unique(samples.cols):
        sel = samples.cols == j
        out[int(j)] = (samples.rows[sel], samples.tubes[sel])
    return out


def _restricted_residual_energy(
    basis: np.ndarray, rows: np.ndarray, tubes: np.ndarray
) -> float:
    """||sub - P(sub)||_F^2 with the basis restricted to the sampled rows."""
    sub = tubes[:, None, :]  # (m, 1, n3)
    if basis.shape[1] == 0:
        return float(np.sum(sub**2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegularizedInverseWarning)
        resid = sub - tproj(basis[rows], sub)
    return float(np.sum(resid**2))


def estimate_column_probs(
    basis: np.ndarray,
    first_pass_samples: TubeSampleSet,
    remaining: np.ndarray,
) -> tuple[np.ndarray, bool]:
    """Score remaining columns by out-of-subspace energy of their samples.

    Returns probabilities over `remaining` summing to one, and a flag that
    is True when all residuals vanished and the scores fell back to uniform.
    """
    remaining = np.asarray(remaining, dtype=np.int64)
    if remaining.size == 0:
        raise ValueError("no remaining columns to score")
    per_col = _columns_of(first_pass_samples)
    energies = np.zeros(remaining.size)
    data_energy = 0.0
    for idx, j in enumerate(remaining):
        rows, tubes = per_col[int(j)]
        data_energy += float(np.sum(tubes**2))
        energies[idx] = _restricted_residual_energy(basis, rows, tubes)
    total = float(energies.sum())
    if data_energy == 0.0 or total <= 1e-16 * data_energy:
        return np.full(remaining.size, 1.0 / remaining.size), True
    return energies / total, False


def _draw_without_replacement(
    rng: np.random.Generator, items: np.ndarray, weights: np.ndarray, count: int
) -> np.ndarray:
    """Sequential weighted draw; zero-weight items only after positive ones."""
    items = np.asarray(items)
    w = np.asarray(weights, dtype=float).copy()
    if np.any(w < 0):
        raise ValueError("negative sampling weights")
    if count > items.size:
        raise ValueError(f"cannot draw {count} of {items.size} items")
    alive = np.ones(items.size, dtype=bool)
    picked = np.empty(count, dtype=items.dtype)
    for t in range(count):
        aw = np.where(alive, w, 0.0)
        total = aw.sum()
        if total > 0.0:
            u = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(aw), u, side="right"))
            idx = min(idx, items.size - 1)
            while not alive[idx]:  # guard against fp boundary hits
                idx -= 1
        else:
            idx = int(rng.choice(np.flatnonzero(alive)))
        picked[t] = items[idx]
        alive[idx] = False
    return picked


def _orthonormal_directions(
    block: np.ndarray, scale: float
) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of a residual block, dropping roundoff directions.

    Keeps the t-SVD directions whose captured energy (theta fiber norm)
    exceeds DIRECTION_DROP_REL * scale, where scale is the norm of the
    measured block the residual came from.
    """
    factors = tsvd(block, full=False)
    keep = int(np.count_nonzero(factors.fiber_norms > DIRECTION_DROP_REL * scale))
    return factors.u[:, :keep, :], factors.fiber_norms[:keep]


def _truncate_subspace(
    sub: SubspaceEstimate, cap: int
) -> tuple[SubspaceEstimate, bool]:
    if sub.dim <= cap:
        return sub, False
    order = np.argsort(-sub.energies, kind="stable")[:cap]
    keep = np.sort(order)
    return (
        SubspaceEstimate(basis=sub.basis[:, keep, :], energies=sub.energies[keep]),
        True,
    )


def _select_dimension(fiber_norms: np.ndarray, aspect: float) -> int | None:
    """Noise-elbow cut over non-increasing t-SVD fiber norms.

    Measurement noise flattens the trailing fiber norms at a common level;
    directions below omega(aspect) * median are then just noise and only
    hurt the least-squares extension.  The cut is applied only when a
    factor-2 gap separates kept from dropped, so data that genuinely fills
    every direction (equal norms, true rank = block width) is never
    truncated and noiseless exact recovery is preserved.  Returns None
    when no clear elbow exists (smoothly decaying spectrum).
    """
    n = fiber_norms.size
    if n < 4:
        return n
    b = min(max(aspect, 0.0), 1.0)
    omega = 0.56 * b**3 - 0.95 * b**2 + 1.82 * b + 1.43
    tau = omega * float(np.median(fiber_norms))
    below = np.flatnonzero(fiber_norms < tau)
    if below.size == 0:
        return n
    cut = int(below[0])
    if cut == 0 or fiber_norms[cut - 1] < 2.0 * fiber_norms[cut]:
        return None
    return cut


def _cv_dimension(
    basis: np.ndarray,
    per_col: dict[int, tuple[np.ndarray, np.ndarray]],
    skip_cols: set[int],
    m: int,
) -> int | None:
    """Pick the estimation dimension by held-out prediction error.

    Every fourth first-pass row per column (the rows are already a uniform
    draw, so a systematic slice of them is unbiased) is held out; candidate
    dimensions are scored by how well the remaining rows predict the
    held-out tubes, summed over all partially sampled columns.  Returns
    the smallest dimension within 1% of the best score, or None when the
    split leaves nothing to fit or hold out.
    """
    n1, dim, n3 = basis.shape
    if dim == 0 or m < 2:
        return None
    splits = []
    min_fit = m
    for j, (rows, tubes) in per_col.items():
        if j in skip_cols or rows.size < 2:
            continue
        idx = np.arange(rows.size)
        hold_idx = idx[idx % 4 == 3]
        if hold_idx.size == 0:
            hold_idx = idx[-1:]
        fit_idx = np.setdiff1d(idx, hold_idx)
        min_fit = min(min_fit, fit_idx.size)
        splits.append((rows[fit_idx], tubes[fit_idx], rows[hold_idx], tubes[hold_idx]))
    if not splits or min_fit < 1:
        return None
    cand = min(dim, min_fit)
    errs = np.zeros(cand)
    for d in range(1, cand + 1):
        sub_d = SubspaceEstimate(basis=basis[:, :d, :], energies=np.zeros(d))
        tot = 0.0
        for fit_rows, fit_tubes, hold_rows, hold_tubes in splits:
            est = estimate_lateral_slice(sub_d, fit_rows, fit_tubes)[:, 0, :]
            tot += float(np.sum((est[hold_rows] - hold_tubes) ** 2))
        errs[d - 1] = tot
    best = float(np.min(errs))
    within = np.flatnonzero(errs <= best * (1.0 + 1e-9))
    return int(within[0]) + 1


def second_pass(
    oracle: MeasurementOracle,
    cfg: AdaptiveConfig,
    first_pass_samples: TubeSampleSet,
) -> tuple[SubspaceEstimate, TubeSampleSet, RunReport]:
    """Adaptive rounds: score columns, sample the chosen ones fully, grow
    the subspace with each block's orthonormalized residual.

    Returns the subspace, the tubes newly measured in this pass, and a
    report whose round_residuals track the total out-of-subspace energy of
    the first-pass samples at the start of each round.
    """
    n1, n2, n3 = oracle.n1, oracle.n2, oracle.n3
    m, s = pass_budgets(n1, n2, cfg)
    sub = SubspaceEstimate.empty(n1, n3)
    report = RunReport(cost_tubes=oracle.cost, rounds=0, subspace_dim=0)
    new_rows: list[np.ndarray] = []
    new_cols: list[np.ndarray] = []
    new_tubes: list[np.ndarray] = []
    if s == 0:
        report.flags.append("second_pass_skipped")
        empty = TubeSampleSet(
            n1, n2, n3, np.empty(0, np.int64), np.empty(0, np.int64),
            np.empty((0, n3)),
        )
        return sub, empty, report
    per_col = _columns_of(first_pass_samples)
    cap = cfg.rank_cap if cfg.rank_cap is not None else min(n1, cfg.rounds_l * s)
    remaining = np.arange(n2, dtype=np.int64)
    budget_left = cfg.budget_m - oracle.cost
    for l in range(cfg.rounds_l):
        if remaining.size == 0:
            report.flags.append("columns_exhausted")
            break
        report.round_residuals.append(
            sum(
                _restricted_residual_energy(sub.basis, *per_col[j])
                for j in range(n2)
            )
        )
        # the floor in the per-round formula strands up to L*(n1-m)-1 tubes;
        # the last round absorbs them so the budget is actually spent
        s_round = s if l < cfg.rounds_l - 1 else max(s, budget_left // (n1 - m))
        s_l = min(s_round, remaining.size, budget_left // (n1 - m))
        if s_l < 1:
            report.flags.append("budget_exhausted")
            report.round_residuals.pop()
            break
        if l == cfg.rounds_l - 1 and s_l > s:
            report.flags.append("budget_topup")
        probs, fallback = estimate_column_probs(
            sub.basis, first_pass_samples, remaining
        )
        if fallback:
            report.flags.append(f"uniform_fallback_round_{l}")
        chosen = _draw_without_replacement(
            stream(cfg.seed, STREAM_SECOND_PASS, l), remaining, probs, s_l
        )
        block = np.empty((n1, s_l, n3))
        for c, j in enumerate(chosen):
            for i in range(n1):
                tube = oracle.query(i, int(j))
                block[i, c, :] = tube
                if i not in per_col[int(j)][0]:
                    new_rows.append(np.int64(i))
                    new_cols.append(j)
                    new_tubes.append(tube)
        budget_left = cfg.budget_m - oracle.cost
        resid = block if sub.dim == 0 else block - tproj(sub.basis, block)
        if sub.dim > 0:  # second orthogonalization pass kills fp drift
            resid = resid - tproj(sub.basis, resid)
        dirs, energies = _orthonormal_directions(
            resid, float(np.linalg.norm(block))
        )
        if dirs.shape[1] > 0:
            sub = SubspaceEstimate(
                basis=np.concatenate([sub.basis, dirs], axis=1),
                energies=np.concatenate([sub.energies, energies]),
            )
            sub, truncated = _truncate_subspace(sub, cap)
            if truncated:
                report.flags.append(f"rank_cap_round_{l}")
        remaining = np.setdiff1d(remaining, chosen)
        report.rounds = l + 1
    report.cost_tubes = oracle.cost
    report.subspace_dim = sub.dim
    if new_rows:
        pass_samples = TubeSampleSet(
            n1, n2, n3,
            np.array(new_rows), np.array(new_cols), np.vstack(new_tubes),
        )
    else:
        pass_samples = TubeSampleSet(
            n1, n2, n3, np.empty(0, np.int64), np.empty(0, np.int64),
            np.empty((0, n3)),
        )
    return sub, pass_samples, report


def estimate_lateral_slice(
    sub: SubspaceEstimate, omega_rows: np.ndarray, tubes: np.ndarray
) -> np.ndarray:
    """Least-squares column estimate through the subspace.

    Solves for tube coefficients from the sampled rows and expands through
    the full basis: basis * (basis_rows^T * basis_rows)^-1 * basis_rows^T * y.
    Returns an (n1, 1, n3) lateral slice.
    """
    omega_rows = np.asarray(omega_rows, dtype=np.int64)
    tubes = np.asarray(tubes, dtype=float)
    n1, d, n3 = sub.basis.shape
    if tubes.shape != (omega_rows.size, n3):
        raise ValueError(f"tubes shape {tubes.shape} != ({omega_rows.size}, {n3})")
    if d == 0:
        return np.zeros((n1, 1, n3))
    if omega_rows.size < d:
        raise UnderdeterminedError(
            f"column has {omega_rows.size} sampled rows but the subspace has "
            f"dimension {d}; increase the first-pass row count or cap the "
            f"subspace dimension"
        )
    fb = np.fft.fft(sub.basis, axis=2)
    fy = np.fft.fft(tubes, axis=1)
    out = np.empty((n1, n3), dtype=complex)
    for k in range(n3 // 2 + 1):
        a = fb[omega_rows, :, k]
        g = a.conj().T @ a
        sv = np.linalg.svd(g, compute_uv=False)
        smax, smin = sv[0], sv[-1]
        if smax == 0.0:
            # the sampled rows miss the basis support entirely; the
            # minimum-norm least-squares answer is zero coefficients
            out[:, k] = 0.0
            kc = (n3 - k) % n3
            if kc != k:
                out[:, kc] = 0.0
            continue
        if smin < RCOND_SINGULAR * smax:
            g = g + (REG_EPS * smax) * np.eye(d)
        coeff = np.linalg.solve(g, a.conj().T @ fy[:, k])
        xk = fb[:, :, k] @ coeff
        out[:, k] = xk
        kc = (n3 - k) % n3
        if kc != k:
            out[:, kc] = xk.conj()
    return np.fft.ifft(out, axis=1).real[:, None, :]


def adaptive_complete(
    truth_or_oracle: np.ndarray | MeasurementOracle,
    cfg: AdaptiveConfig,
) -> tuple[np.ndarray, TubeSampleSet, RunReport]:
    """Full pipeline: first pass, adaptive rounds, per-column estimation.

    Accepts a ground-truth map (wrapped in a noiseless oracle) or any
    measurement oracle.  Sampled positions carry their measured values in
    the output; unsampled rows come from the subspace least squares.

    The estimation basis is re-derived from the block of fully measured
    columns: the rounds accumulate that block's span incrementally, so
    re-orthonormalizing it changes nothing about the span but gives the
    best conditioning, and its fiber-norm profile exposes where real
    structure ends and measurement noise begins (see _select_dimension).
    The dimension is further capped at the first-pass row count m, since a
    column with m sampled rows cannot identify more coefficients.
    """
    if hasattr(truth_or_oracle, "query"):
        oracle = truth_or_oracle
    else:
        oracle = SimulatedOracle(
            np.asarray(truth_or_oracle), sigma_dbm=0.0, seed=cfg.seed,
            floor_dbm=cfg.floor_dbm,
        )
    n1, n2, n3 = oracle.n1, oracle.n2, oracle.n3
    fp = first_pass(oracle, cfg)
    m, _ = pass_budgets(n1, n2, cfg)
    sub, sp, report = second_pass(oracle, cfg, fp)
    per_col_fp = _columns_of(fp)
    fully = sorted(set(int(j) for j in np.unique(sp.cols))) if sp.count else []
    fully_set = set(fully)
    all_rows = np.arange(n1, dtype=np.int64)
    if fully:
        block = np.empty((n1, len(fully), n3))
        for c, j in enumerate(fully):
            for i in range(n1):
                block[i, c, :] = oracle.query(int(i), j)
        dirs, energies = _orthonormal_directions(
            block, float(np.linalg.norm(block))
        )
        d_sel = _select_dimension(energies, len(fully) / n1)
        if d_sel is None:
            d_sel = _cv_dimension(dirs, per_col_fp, fully_set, m)
            if d_sel is None:
                d_sel = dirs.shape[1]
            else:
                report.flags.append("dimension_cv")
        elif d_sel < dirs.shape[1]:
            report.flags.append("noise_floor_cut")
        sub = SubspaceEstimate(basis=dirs[:, :d_sel, :], energies=energies[:d_sel])
        if cfg.rank_cap is not None:
            sub, truncated = _truncate_subspace(sub, cfg.rank_cap)
            if truncated:
                report.flags.append("rank_cap_estimation")
    if m < n1:
        sub, truncated = _truncate_subspace(sub, m)
        if truncated:
            report.flags.append("estimation_cap")
    report.subspace_dim = sub.dim
    est = np.zeros((n1, n2, n3))
    for j in range(n2):
        if j in fully_set:
            rows = all_rows
            tubes = np.vstack([oracle.query(int(i), j) for i in rows])
        else:
            rows, tubes = per_col_fp[j]
        est[:, j, :] = estimate_lateral_slice(sub, rows, tubes)[:, 0, :]
    # sampled positions keep their measured values
    for samples in (fp, sp):
        if samples.count:
            est[samples.rows, samples.cols, :] = samples.tubes
    if cfg.floor_dbm is not None:
        est = np.maximum(est, cfg.floor_dbm)
    all_samples = TubeSampleSet(
        n1, n2, n3,
        np.concatenate([fp.rows, sp.rows]),
        np.concatenate([fp.cols, sp.cols]),
        np.vstack([fp.tubes, sp.tubes]) if sp.count else fp.tubes,
    )
    report.cost_tubes = oracle.cost
    return est, all_samples, report


@dataclass
class ProbQuality:
    """Estimated vs true column sampling scores and their ratio band."""

    p_true: np.ndarray
    p_hat: np.ndarray
    ratios: np.ndarray  # nan where p_true == 0
    fraction_within: float  # share of columns with ratio in [2/5, 5/2]


def prob_estimate_quality(
    truth: np.ndarray,
    sub: SubspaceEstimate,
    first_pass_samples: TubeSampleSet,
) -> ProbQuality:
    """Compare sample-based column scores against the exact residual scores.

    The exact score of column j is its share of ||truth - P(truth)||_F^2,
    with the projector applied through the full (unrestricted) basis.
    """
    truth = _check3(truth, "truth map")
    n1, n2, n3 = truth.shape
    if sub.dim == 0:
        resid = truth
    else:
        resid = truth - tproj(sub.basis, truth)
    col_energy = np.sum(resid**2, axis=(0, 2))
    total = float(col_energy.sum())
    if total == 0.0:
        p_true = np.full(n2, 1.0 / n2)
    else:
        p_true = col_energy / total
    p_hat, _ = estimate_column_probs(
        sub.basis, first_pass_samples, np.arange(n2, dtype=np.int64)
    )
    ratios = np.full(n2, np.nan)
    within = np.zeros(n2, dtype=bool)
    pos = p_true > 0
    ratios[pos] = p_hat[pos] / p_true[pos]
    within[pos] = (ratios[pos] >= 0.4) & (ratios[pos] <= 2.5)
    within[~pos] = p_hat[~pos] <= 1e-15
    return ProbQuality(
        p_true=p_true,
        p_hat=p_hat,
        ratios=ratios,
        fraction_within=float(np.mean(within)),
    )


def uniform_sample(
    oracle: MeasurementOracle, count: int, seed: int
) -> TubeSampleSet:
    """Measure `count` distinct positions drawn uniformly over the grid."""
    n1, n2, n3 = oracle.n1, oracle.n2, oracle.n3
    if not 1 <= count <= n1 * n2:
        raise ValueError(f"count {count} outside 1..{n1 * n2}")
    flat = stream(seed, STREAM_UNIFORM).permutation(n1 * n2)[:count]
    flat = np.sort(flat)
    rows = flat // n2
    cols = flat % n2
    tubes = np.vstack([oracle.query(int(i), int(j)) for i, j in zip(rows, cols)])
    return TubeSampleSet(n1=n1, n2=n2, n3=n3, rows=rows, cols=cols, tubes=tubes)
