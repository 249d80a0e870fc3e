"""Synthetic indoor RSS radio maps from a log-distance path-loss model.

A floor plan fixes a rectangular region, a regular n1 x n2 grid of
reference points at cell centers, straight-line walls with per-crossing
attenuation, and access points with transmit powers.  The received power
at grid point p from access point k is

    tx_k - ref_loss - 10 * exponent * log10(max(d(p, ap_k), 1 m))
         - sum of attenuations of walls crossed by the segment p->ap_k

clamped below at -110 dBm.  This produces maps with the spatial
correlation structure (smooth decay plus wall discontinuities) that
low-tubal-rank completion targets, without any ray-tracing machinery.

Grid convention: row index i runs along the height (y) axis, column
index j along the width (x) axis; grid point (i, j) sits at the cell
center ((j + 0.5) * width/n2, (i + 0.5) * height/n1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .completion import FLOOR_DBM, TubeSampleSet
from .tensor_core import _check3

__all__ = [
    "Wall",
    "AccessPoint",
    "FloorPlan",
    "NoiseConfig",
    "default_plan",
    "budget_plan",
    "segments_intersect",
    "wall_crossings",
    "gen_rss",
    "add_noise",
    "nse",
]

PLAN_FORMAT = "rfplan/1"


@dataclass(frozen=True)
class Wall:
    x1: float
    y1: float
    x2: float
    y2: float
    attenuation_db: float


@dataclass(frozen=True)
class AccessPoint:
    x: float
    y: float
    tx_power_dbm: float


@dataclass(frozen=True)
class FloorPlan:
    width_m: float
    height_m: float
    n1: int  # grid rows (along height)
    n2: int  # grid columns (along width)
    walls: tuple[Wall, ...]
    aps: tuple[AccessPoint, ...]
    # propagation parameters travel with the plan so a scenario file fully
    # determines its map; gen_rss arguments override them when given
    path_loss_exponent: float = 2.7
    ref_loss_db: float = 40.0

    def __post_init__(self):
        if self.width_m <= 0 or self.height_m <= 0:
            raise ValueError("floor plan must have positive extent")
        if self.n1 < 2 or self.n2 < 2:
            raise ValueError("grid must be at least 2x2")
        if self.path_loss_exponent <= 0:
            raise ValueError("path-loss exponent must be positive")
        if self.ref_loss_db < 0:
            raise ValueError("reference loss must be non-negative")
        if not self.aps:
            raise ValueError("floor plan needs at least one access point")
        for ap in self.aps:
            if not (0 <= ap.x <= self.width_m and 0 <= ap.y <= self.height_m):
                raise ValueError(f"access point ({ap.x}, {ap.y}) outside the region")
        for w in self.walls:
            for x, y in ((w.x1, w.y1), (w.x2, w.y2)):
                if not (0 <= x <= self.width_m and 0 <= y <= self.height_m):
                    raise ValueError(f"wall endpoint ({x}, {y}) outside the region")
            if w.x1 == w.x2 and w.y1 == w.y2:
                raise ValueError("degenerate zero-length wall")
            if w.attenuation_db < 0:
                raise ValueError("wall attenuation must be non-negative")

    @property
    def n3(self) -> int:
        return len(self.aps)

    def cell_size(self) -> tuple[float, float]:
        return self.width_m / self.n2, self.height_m / self.n1

    def point(self, i: int, j: int) -> tuple[float, float]:
        """Metric coordinates of grid point (i, j) at its cell center."""
        cw, ch = self.cell_size()
        return (j + 0.5) * cw, (i + 0.5) * ch

    def grid_coords(self) -> np.ndarray:
        """(n1*n2, 2) metric coordinates in row-major (i, j) order."""
        cw, ch = self.cell_size()
        jj, ii = np.meshgrid(np.arange(self.n2), np.arange(self.n1))
        return np.column_stack(
            [((jj + 0.5) * cw).ravel(), ((ii + 0.5) * ch).ravel()]
        )

    def to_dict(self) -> dict:
        return {
            "format": PLAN_FORMAT,
            "width_m": self.width_m,
            "height_m": self.height_m,
            "grid": [self.n1, self.n2],
            "path_loss_exponent": self.path_loss_exponent,
            "ref_loss_db": self.ref_loss_db,
            "walls": [
                {
                    "x1": w.x1, "y1": w.y1, "x2": w.x2, "y2": w.y2,
                    "attenuation_db": w.attenuation_db,
                }
                for w in self.walls
            ],
            "aps": [
                {"x": a.x, "y": a.y, "tx_power_dbm": a.tx_power_dbm}
                for a in self.aps
            ],
        }

    @staticmethod
    def from_dict(d: dict) -> "FloorPlan":
        if d.get("format") != PLAN_FORMAT:
            raise ValueError(
                f"unsupported plan format {d.get('format')!r}, expected {PLAN_FORMAT!r}"
            )
        return FloorPlan(
            width_m=float(d["width_m"]),
            height_m=float(d["height_m"]),
            n1=int(d["grid"][0]),
            n2=int(d["grid"][1]),
            path_loss_exponent=float(d.get("path_loss_exponent", 2.7)),
            ref_loss_db=float(d.get("ref_loss_db", 40.0)),
            walls=tuple(
                Wall(
                    float(w["x1"]), float(w["y1"]), float(w["x2"]), float(w["y2"]),
                    float(w["attenuation_db"]),
                )
                for w in d.get("walls", [])
            ),
            aps=tuple(
                AccessPoint(float(a["x"]), float(a["y"]), float(a["tx_power_dbm"]))
                for a in d["aps"]
            ),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @staticmethod
    def load(path: str | Path) -> "FloorPlan":
        return FloorPlan.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class NoiseConfig:
    sigma_dbm: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma_dbm < 0:
            raise ValueError("noise sigma must be non-negative")


def default_plan() -> FloorPlan:
    """Reference scenario: 60 x 80 grid (1 m cells), 10 APs, 6 walls.

    Aisle-style hall: two aligned rows of five access points and six
    full-height vertical partition walls.  The layout keeps the tensor's
    row space (the fingerprint profile along y) essentially rank four --
    two bump shapes, the constant direction, and the floor wrinkles --
    because vertical walls shift whole columns without adding any row
    structure.  The steep path-loss exponent stands in for the
    small-scale variation a measured map would have: with a textbook
    exponent near 3 the smooth log-distance fingerprints change so
    slowly across adjacent cells that nearest-fingerprint matching is
    hopeless under realistic query noise, regardless of geometry.
    """
    width, height = 80.0, 60.0
    aps = tuple(
        AccessPoint(float(x), float(y), 145.0)
        for y in (15.0, 45.0)
        for x in (8.0, 24.0, 40.0, 56.0, 72.0)
    )
    walls = tuple(
        Wall(float(x), 0.0, float(x), height, 10.0)
        for x in (12.0, 24.0, 36.0, 48.0, 60.0, 72.0)
    )
    return FloorPlan(
        width_m=width,
        height_m=height,
        n1=60,
        n2=80,
        walls=walls,
        aps=aps,
        path_loss_exponent=10.0,
        ref_loss_db=40.0,
    )


def budget_plan() -> FloorPlan:
    """Tall hall for the sampling-budget experiment: 36 x 12 grid of
    5 m cells, 30 APs, 10 walls.

    Built so the 95th-percentile error can actually reach one cell even
    at 10 dBm query noise: every second column boundary carries a
    vertical wall (rank-neutral for the row space, see default_plan) and
    every sixth row boundary a full-width cross wall.  A cross wall
    flips the crossing indicator for all APs on the far side at once, so
    adjacent rows across it sit ~15*sqrt(#flipped) dB apart while adding
    only a single step direction to the row space.  Six staggered AP
    rows keep the bump gradients dense in y.  The resulting map has row
    space of dimension exactly 12 (constant + 6 bumps + 5 steps), small
    enough for subspace sampling at moderate budgets.
    """
    cell = 5.0
    n1, n2 = 36, 12
    width, height = n2 * cell, n1 * cell
    xs_even = (10.0, 22.0, 34.0, 46.0, 58.0)
    xs_odd = (4.0, 16.0, 28.0, 40.0, 52.0)
    aps = tuple(
        AccessPoint(x, y, 340.0)
        for r, y in enumerate((15.0, 45.0, 75.0, 105.0, 135.0, 165.0))
        for x in (xs_even if r % 2 == 0 else xs_odd)
    )
    walls = tuple(
        Wall(float(x), 0.0, float(x), height, 15.0)
        for x in (10.0, 20.0, 30.0, 40.0, 50.0)
    ) + tuple(
        Wall(0.0, float(y), width, float(y), 15.0)
        for y in (30.0, 60.0, 90.0, 120.0, 150.0)
    )
    return FloorPlan(
        width_m=width,
        height_m=height,
        n1=n1,
        n2=n2,
        walls=walls,
        aps=aps,
        path_loss_exponent=14.0,
        ref_loss_db=40.0,
    )


def _orient(ox, oy, ax, ay, bx, by):
    """Cross product (a-o) x (b-o); sign gives turn direction."""
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def segments_intersect(
    p1: tuple[float, float],
    p2: tuple[float, float],
    q1: tuple[float, float],
    q2: tuple[float, float],
) -> bool:
    """Inclusive segment intersection: endpoint touching and collinear
    overlap both count."""
    d1 = _orient(q1[0], q1[1], q2[0], q2[1], p1[0], p1[1])
    d2 = _orient(q1[0], q1[1], q2[0], q2[1], p2[0], p2[1])
    d3 = _orient(p1[0], p1[1], p2[0], p2[1], q1[0], q1[1])
    d4 = _orient(p1[0], p1[1], p2[0], p2[1], q2[0], q2[1])
    if d1 == 0 and d2 == 0 and d3 == 0 and d4 == 0:
        # collinear (or a degenerate segment on the support line):
        # overlap iff both bounding boxes intersect
        return (
            min(p1[0], p2[0]) <= max(q1[0], q2[0])
            and min(q1[0], q2[0]) <= max(p1[0], p2[0])
            and min(p1[1], p2[1]) <= max(q1[1], q2[1])
            and min(q1[1], q2[1]) <= max(p1[1], p2[1])
        )
    return d1 * d2 <= 0 and d3 * d4 <= 0


def wall_crossings(
    a: tuple[float, float],
    b: tuple[float, float],
    walls: tuple[Wall, ...],
) -> int:
    """Number of walls whose segment intersects segment a-b (each wall
    counts at most once; collinear overlap counts once)."""
    return sum(
        1
        for w in walls
        if segments_intersect(a, b, (w.x1, w.y1), (w.x2, w.y2))
    )


def _attenuation_grid(plan: FloorPlan, ap: AccessPoint) -> np.ndarray:
    """Summed wall attenuation along the segment grid-point -> AP,
    vectorized over all grid points (same inclusive test as
    segments_intersect)."""
    pts = plan.grid_coords()
    px, py = pts[:, 0], pts[:, 1]
    atten = np.zeros(pts.shape[0])
    for w in plan.walls:
        d1 = _orient(w.x1, w.y1, w.x2, w.y2, ap.x, ap.y)
        d2 = _orient(w.x1, w.y1, w.x2, w.y2, px, py)
        d3 = _orient(ap.x, ap.y, px, py, w.x1, w.y1)
        d4 = _orient(ap.x, ap.y, px, py, w.x2, w.y2)
        general = (d1 * d2 <= 0) & (d3 * d4 <= 0)
        collinear = (d1 == 0) & (d2 == 0) & (d3 == 0) & (d4 == 0)
        if np.any(collinear):
            boxes = (
                (np.minimum(ap.x, px) <= max(w.x1, w.x2))
                & (min(w.x1, w.x2) <= np.maximum(ap.x, px))
                & (np.minimum(ap.y, py) <= max(w.y1, w.y2))
                & (min(w.y1, w.y2) <= np.maximum(ap.y, py))
            )
            crossed = np.where(collinear, boxes, general)
        else:
            crossed = general
        atten += crossed * w.attenuation_db
    return atten.reshape(plan.n1, plan.n2)


def gen_rss(
    plan: FloorPlan,
    exponent: float | None = None,
    ref_loss_db: float | None = None,
) -> np.ndarray:
    """Noise-free (n1, n2, n_aps) dBm map for a floor plan.

    exponent is the path-loss exponent, ref_loss_db the loss at 1 m;
    both default to the plan's own values.  Distances below 1 m are
    clamped to 1 m so the log stays bounded.
    """
    if exponent is None:
        exponent = plan.path_loss_exponent
    if ref_loss_db is None:
        ref_loss_db = plan.ref_loss_db
    if exponent <= 0:
        raise ValueError("path-loss exponent must be positive")
    if ref_loss_db < 0:
        raise ValueError("reference loss must be non-negative")
    pts = plan.grid_coords()
    out = np.empty((plan.n1, plan.n2, plan.n3))
    for k, ap in enumerate(plan.aps):
        d = np.hypot(pts[:, 0] - ap.x, pts[:, 1] - ap.y)
        d = np.maximum(d, 1.0).reshape(plan.n1, plan.n2)
        out[:, :, k] = (
            ap.tx_power_dbm
            - ref_loss_db
            - 10.0 * exponent * np.log10(d)
            - _attenuation_grid(plan, ap)
        )
    return np.maximum(out, FLOOR_DBM)


def add_noise(t: np.ndarray, cfg: NoiseConfig) -> np.ndarray:
    """i.i.d. Gaussian dBm noise; sigma=0 returns an identical copy."""
    t = _check3(t)
    if cfg.sigma_dbm == 0.0:
        return t.copy()
    rng = np.random.default_rng(cfg.seed)
    return t + rng.normal(0.0, cfg.sigma_dbm, t.shape)


def nse(
    truth: np.ndarray, est: np.ndarray, omega: TubeSampleSet | None = None
) -> float:
    """Normalized squared error over the unsampled tubes.

    sum over unsampled (i, j) of ||est - truth||^2 of the tube, divided by
    the same sum of ||truth||^2.  omega=None scores every position.
    """
    truth = _check3(truth, "truth")
    est = _check3(est, "estimate")
    if truth.shape != est.shape:
        raise ValueError(f"shape mismatch: truth {truth.shape}, est {est.shape}")
    if omega is None:
        unsampled = np.ones(truth.shape[:2], dtype=bool)
    else:
        if (omega.n1, omega.n2, omega.n3) != truth.shape:
            raise ValueError(
                f"sample set grid {(omega.n1, omega.n2, omega.n3)} does not "
                f"match map shape {truth.shape}"
            )
        unsampled = ~omega.mask()
    if not np.any(unsampled):
        raise ValueError("no unsampled tubes: error is undefined")
    diff = np.sum((est - truth) ** 2, axis=2)[unsampled]
    denom = float(np.sum(truth**2, axis=2)[unsampled].sum())
    if denom == 0.0:
        raise ValueError("truth has zero energy on the unsampled set")
    return float(diff.sum() / denom)
