"""Fingerprint localization against a (possibly reconstructed) radio map.

A fingerprint database pairs metric coordinates with RSS vectors.  The
weighted KNN locator averages the k nearest records' coordinates with
weights 1/(distance + d0); the kernel locator averages the h nearest
with weights 1/(distance^2 + d0^2).  Fingerprint distances are Euclidean
in dBm space.  Records are kept in a canonical (x, y) sort so nearest-
neighbor ties resolve by lower record index regardless of insertion
order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .completion import TubeSampleSet
from .simulate import FloorPlan
from .tensor_core import _check3

__all__ = [
    "LocalizerConfig",
    "FingerprintDB",
    "build_db",
    "knn_locate",
    "kernel_locate",
    "localization_error",
    "empirical_cdf",
    "write_errors_csv",
    "read_errors_csv",
    "write_cdf_csv",
]


@dataclass(frozen=True)
class LocalizerConfig:
    k: int = 5
    d0: float = 0.01
    h: int = 50

    def __post_init__(self):
        if self.k < 1 or self.h < 1:
            raise ValueError("neighbor counts k and h must be at least 1")
        if self.d0 < 0:
            raise ValueError("distance offset d0 must be non-negative")


class FingerprintDB:
    """Reference records sorted canonically by (x, y) then fingerprint."""

    def __init__(self, coords: np.ndarray, prints: np.ndarray):
        coords = np.asarray(coords, dtype=float)
        prints = np.asarray(prints, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError(f"coords must be (n, 2), got {coords.shape}")
        if prints.ndim != 2 or prints.shape[0] != coords.shape[0]:
            raise ValueError(
                f"prints shape {prints.shape} does not match {coords.shape[0]} records"
            )
        if coords.shape[0] == 0:
            raise ValueError("fingerprint database is empty")
        if not (np.all(np.isfinite(coords)) and np.all(np.isfinite(prints))):
            raise ValueError("database contains NaN or Inf")
        order = np.lexsort(tuple(prints[:, c] for c in range(prints.shape[1]))[::-1]
                           + (coords[:, 1], coords[:, 0]))
        self.coords = coords[order]
        self.prints = prints[order]

    def __len__(self) -> int:
        return self.coords.shape[0]


def build_db(
    rss_map: np.ndarray | None,
    plan: FloorPlan,
    subset: TubeSampleSet | None = None,
) -> FingerprintDB:
    """Database from a full map, or from sampled tubes only (subset given).

    With a subset the fingerprints are the measured tubes themselves, which
    is what direct localization from raw samples uses.
    """
    if subset is not None:
        if subset.count == 0:
            raise ValueError("cannot build a database from zero samples")
        if (subset.n1, subset.n2) != (plan.n1, plan.n2):
            raise ValueError("sample grid does not match the floor plan grid")
        cw, ch = plan.cell_size()
        coords = np.column_stack(
            [(subset.cols + 0.5) * cw, (subset.rows + 0.5) * ch]
        )
        return FingerprintDB(coords, subset.tubes)
    rss_map = _check3(rss_map, "rss map")
    if rss_map.shape[:2] != (plan.n1, plan.n2):
        raise ValueError(
            f"map grid {rss_map.shape[:2]} does not match plan "
            f"grid {(plan.n1, plan.n2)}"
        )
    coords = plan.grid_coords()
    prints = rss_map.reshape(plan.n1 * plan.n2, rss_map.shape[2])
    return FingerprintDB(coords, prints)


def _weighted_position(
    coords: np.ndarray, weights: np.ndarray
) -> tuple[float, float]:
    if np.any(np.isinf(weights)):
        sel = np.isinf(weights)
        coords = coords[sel]
        weights = np.ones(coords.shape[0])
    est = (coords * weights[:, None]).sum(axis=0) / weights.sum()
    return float(est[0]), float(est[1])


def _nearest(db: FingerprintDB, query: np.ndarray, count: int):
    query = np.asarray(query, dtype=float).reshape(-1)
    if query.size != db.prints.shape[1]:
        raise ValueError(
            f"query has {query.size} readings, database has "
            f"{db.prints.shape[1]} access points"
        )
    if not np.all(np.isfinite(query)):
        raise ValueError("query contains NaN or Inf")
    if count > len(db):
        raise ValueError(
            f"neighbor count {count} exceeds database size {len(db)}"
        )
    d = np.linalg.norm(db.prints - query, axis=1)
    order = np.argsort(d, kind="stable")[:count]
    return d[order], db.coords[order]


def knn_locate(
    db: FingerprintDB, query: np.ndarray, cfg: LocalizerConfig = LocalizerConfig()
) -> tuple[float, float]:
    """Weighted k-nearest-neighbor estimate with weights 1/(d + d0).

    Both coordinates use the same weights; d0 keeps an exact fingerprint
    match from dominating by a division by zero (d0=0 makes exact matches
    authoritative)."""
    d, coords = _nearest(db, query, cfg.k)
    with np.errstate(divide="ignore"):
        w = 1.0 / (d + cfg.d0)
    return _weighted_position(coords, w)


def kernel_locate(
    db: FingerprintDB, query: np.ndarray, cfg: LocalizerConfig = LocalizerConfig()
) -> tuple[float, float]:
    """Kernel estimate over the h nearest records, weights 1/(d^2 + d0^2)."""
    d, coords = _nearest(db, query, cfg.h)
    with np.errstate(divide="ignore"):
        w = 1.0 / (d**2 + cfg.d0**2)
    return _weighted_position(coords, w)


def localization_error(
    truth: tuple[float, float], est: tuple[float, float]
) -> float:
    """Euclidean positioning error in meters."""
    return float(np.hypot(est[0] - truth[0], est[1] - truth[1]))


def empirical_cdf(errors: np.ndarray) -> list[tuple[float, float]]:
    """(threshold, fraction <= threshold) at each distinct error value."""
    errors = np.asarray(errors, dtype=float).reshape(-1)
    if errors.size == 0:
        raise ValueError("no errors to summarize")
    if np.any(errors < 0) or not np.all(np.isfinite(errors)):
        raise ValueError("errors must be finite and non-negative")
    thresholds = np.unique(errors)
    fractions = np.searchsorted(np.sort(errors), thresholds, side="right") / errors.size
    return [(float(t), float(f)) for t, f in zip(thresholds, fractions)]


def write_errors_csv(
    path: str | Path,
    rows: list[dict],
    config_comment: str,
) -> None:
    """Per-query error rows: x,y,x_hat,y_hat,error_m plus leading columns
    the caller includes (method/noise/seed for experiment output)."""
    if not rows:
        raise ValueError("no rows to write")
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        fh.write(f"# config: {config_comment}\n")
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def read_errors_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_cdf_csv(
    path: str | Path,
    rows: list[dict],
    config_comment: str,
) -> None:
    if not rows:
        raise ValueError("no rows to write")
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        fh.write(f"# config: {config_comment}\n")
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
