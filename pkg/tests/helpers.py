"""Independent oracles the unit tests check the package against.

Everything here is deliberately implemented by a different route than the
package: the t-product by direct circular convolution (no FFT), the DFT
by explicit summation, wall crossings through shapely's geometry engine,
and RSS values by scalar per-point evaluation.  Slow and simple on
purpose; only used at small sizes.
"""

from __future__ import annotations

import numpy as np
from shapely.geometry import LineString


def tprod_oracle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """t-product via direct circular convolution of tubes.

    c(i,j,t) = sum over p, tau of a(i,p,tau) * b(p,j,(t-tau) mod n3).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, p, n3 = a.shape
    assert b.shape[0] == p and b.shape[2] == n3
    n2 = b.shape[1]
    c = np.zeros((n1, n2, n3))
    for t in range(n3):
        for tau in range(n3):
            c[:, :, t] += a[:, :, tau] @ b[:, :, (t - tau) % n3]
    return c


def dft_oracle(tube: np.ndarray) -> np.ndarray:
    """Unnormalized DFT of a 1-D array by explicit summation."""
    tube = np.asarray(tube, dtype=complex).reshape(-1)
    n = tube.size
    k = np.arange(n)
    # direct O(n^2) evaluation, no FFT anywhere
    return np.array(
        [np.sum(tube * np.exp(-2j * np.pi * kk * k / n)) for kk in range(n)]
    )


def dft3_oracle(t: np.ndarray) -> np.ndarray:
    """Mode-3 DFT of a third-order array via dft_oracle per tube."""
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape, dtype=complex)
    for i in range(t.shape[0]):
        for j in range(t.shape[1]):
            out[i, j, :] = dft_oracle(t[i, j, :])
    return out


def planted(
    n1: int, n2: int, n3: int, r: int, rng: np.random.Generator,
    normalize: bool = True,
) -> np.ndarray:
    """Random tensor of tubal rank at most r from two Gaussian factors."""
    u = rng.standard_normal((n1, r, n3))
    w = rng.standard_normal((r, n2, n3))
    t = tprod_oracle(u, w)
    if normalize:
        t = t / np.linalg.norm(t)
    return t


def crossings_oracle(a, b, walls) -> int:
    """Wall-crossing count via shapely segment intersection."""
    seg = LineString([tuple(a), tuple(b)])
    count = 0
    for w in walls:
        if seg.intersects(LineString([(w.x1, w.y1), (w.x2, w.y2)])):
            count += 1
    return count


def rss_oracle(plan, exponent=None, ref_loss_db=None) -> np.ndarray:
    """Scalar per-point RSS evaluation with shapely crossings.

    Same model as the package generator, independently coded: meant for
    small plans only.
    """
    if exponent is None:
        exponent = plan.path_loss_exponent
    if ref_loss_db is None:
        ref_loss_db = plan.ref_loss_db
    out = np.empty((plan.n1, plan.n2, plan.n3))
    for i in range(plan.n1):
        for j in range(plan.n2):
            x, y = plan.point(i, j)
            for k, ap in enumerate(plan.aps):
                d = max(np.hypot(x - ap.x, y - ap.y), 1.0)
                atten = sum(
                    w.attenuation_db
                    for w in plan.walls
                    if LineString([(x, y), (ap.x, ap.y)]).intersects(
                        LineString([(w.x1, w.y1), (w.x2, w.y2)])
                    )
                )
                out[i, j, k] = (
                    ap.tx_power_dbm - ref_loss_db
                    - 10.0 * exponent * np.log10(d) - atten
                )
    return np.maximum(out, -110.0)
