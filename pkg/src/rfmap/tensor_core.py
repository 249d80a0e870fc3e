"""Third-order tensor algebra under the tubal (t-product) framework.

A tensor here is a plain numpy array of shape (n1, n2, n3): an n1 x n2
grid of length-n3 "tubes".  Multiplying two tensors replaces the scalar
products of ordinary matrix multiplication with circular convolution of
tubes.  The mode-3 DFT diagonalizes circular convolution, so every
operation below reduces to independent complex matrix problems on the n3
Fourier-domain frontal slices; for real tensors slice k and slice n3-k
are complex conjugates, and the heavy routines only factor the first
half and mirror the rest.

Convention: the forward mode-3 DFT is unnormalized and the inverse
carries the 1/n3 factor, so ifft3(fft3(t)) == t and Parseval reads
||fft3(t)||_F^2 == n3 * ||t||_F^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NumericError",
    "SingularSliceError",
    "SvdConvergenceError",
    "RegularizedInverseWarning",
    "TSVDFactors",
    "fft3",
    "ifft3",
    "tprod",
    "ttranspose",
    "identity_tensor",
    "tsvd",
    "tubal_rank",
    "best_rank_r",
    "tnn",
    "tinv",
    "tproj",
    "coherence",
    "max_column_energy",
]

# A Fourier slice counts as singular when smallest/largest singular value
# drops below this; regularized paths then shift the Gram by REG_EPS*largest.
RCOND_SINGULAR = 1e-12
REG_EPS = 1e-10


class NumericError(RuntimeError):
    """A linear-algebra step failed beyond recovery."""


class SingularSliceError(NumericError):
    """A Fourier-domain frontal slice is numerically singular."""

    def __init__(self, slice_index: int, cond: float):
        self.slice_index = slice_index
        self.cond = cond
        super().__init__(
            f"Fourier slice {slice_index} is numerically singular "
            f"(condition estimate {cond:.3e}); pass regularize=True to shift "
            f"the spectrum and continue"
        )


class SvdConvergenceError(NumericError):
    def __init__(self, slice_index: int):
        self.slice_index = slice_index
        super().__init__(f"SVD did not converge on Fourier slice {slice_index}")


class RegularizedInverseWarning(UserWarning):
    """A near-singular Gram matrix was shifted by eps*I before solving."""


def _check3(t: np.ndarray, name: str = "tensor") -> np.ndarray:
    t = np.asarray(t)
    if t.ndim != 3:
        raise ValueError(f"{name} must be a third-order array, got shape {t.shape}")
    if min(t.shape) < 1:
        raise ValueError(f"{name} has an empty dimension: shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ValueError(f"{name} contains NaN or Inf values")
    return t


def fft3(t: np.ndarray) -> np.ndarray:
    """Unnormalized DFT along the tube (third) axis."""
    return np.fft.fft(_check3(t), axis=2)


def ifft3(f: np.ndarray) -> np.ndarray:
    """Inverse of fft3; expects a conjugate-symmetric stack and returns real.

    Raises ValueError if the inverse transform has a non-trivial imaginary
    part, which means the input was not the transform of a real tensor.
    """
    f = np.asarray(f)
    if f.ndim != 3:
        raise ValueError(f"expected a third-order array, got shape {f.shape}")
    out = np.fft.ifft(f, axis=2)
    scale = np.max(np.abs(out)) or 1.0
    resid = np.max(np.abs(out.imag))
    if resid > 1e-8 * scale:
        raise ValueError(
            f"inverse transform is not real (imaginary residue {resid:.3e}); "
            f"input is not conjugate-symmetric along the tube axis"
        )
    return np.ascontiguousarray(out.real)


def tprod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """t-product: matrix multiply with tube-wise circular convolution.

    Shapes (n1, p, n3) * (p, n2, n3) -> (n1, n2, n3).  Computed as
    slice-wise matrix products in the Fourier domain.
    """
    a = _check3(a, "left operand")
    b = _check3(b, "right operand")
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise ValueError(
            f"t-product shapes do not chain: {a.shape} * {b.shape} "
            f"(need (n1, p, n3) * (p, n2, n3))"
        )
    fa = np.moveaxis(np.fft.fft(a, axis=2), 2, 0)
    fb = np.moveaxis(np.fft.fft(b, axis=2), 2, 0)
    fc = np.matmul(fa, fb)
    return np.fft.ifft(np.moveaxis(fc, 0, 2), axis=2).real


def ttranspose(t: np.ndarray) -> np.ndarray:
    """Tensor transpose: transpose each frontal slice, reverse slices 2..n3."""
    t = _check3(t)
    flipped = np.concatenate([t[:, :, :1], t[:, :, -1:0:-1]], axis=2)
    return np.ascontiguousarray(flipped.transpose(1, 0, 2))


def identity_tensor(n: int, n3: int) -> np.ndarray:
    """Identity element of the t-product: eye in slice one, zeros elsewhere."""
    if n < 1 or n3 < 1:
        raise ValueError(f"identity_tensor needs positive sizes, got {n}, {n3}")
    out = np.zeros((n, n, n3))
    out[:, :, 0] = np.eye(n)
    return out


def _half_indices(n3: int) -> range:
    # Slices 0..n3//2 determine the rest by conjugate symmetry for real input.
    return range(n3 // 2 + 1)


@dataclass(frozen=True)
class TSVDFactors:
    """Orthogonal-diagonal-orthogonal factorization t = u * theta * v^T.

    u and v are t-orthogonal, theta is diagonal in every frontal slice, and
    fiber_norms holds ||theta(i,i,:)||_F in non-increasing order.
    """

    u: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    fiber_norms: np.ndarray

    def compose(self) -> np.ndarray:
        return tprod(self.u, tprod(self.theta, ttranspose(self.v)))


def tsvd(t: np.ndarray, full: bool = True) -> TSVDFactors:
    """Tensor SVD from per-slice complex SVDs in the Fourier domain.

    full=True returns u (n1,n1,n3), theta (n1,n2,n3), v (n2,n2,n3); economy
    mode trims to q = min(n1, n2) columns.  Sorting each slice's singular
    values descending makes the theta fiber norms non-increasing for free.
    """
    t = _check3(t)
    n1, n2, n3 = t.shape
    q = min(n1, n2)
    cu, cv = (n1, n2) if full else (q, q)
    ft = np.fft.fft(t, axis=2)
    uf = np.zeros((n1, cu, n3), dtype=complex)
    vf = np.zeros((n2, cv, n3), dtype=complex)
    sf = np.zeros((q, n3))
    for k in _half_indices(n3):
        try:
            u, s, vh = np.linalg.svd(ft[:, :, k], full_matrices=full)
        except np.linalg.LinAlgError as exc:
            raise SvdConvergenceError(k) from exc
        uf[:, :, k] = u
        vf[:, :, k] = vh.conj().T
        sf[:, k] = s
        kc = (n3 - k) % n3
        if kc != k:
            uf[:, :, kc] = u.conj()
            vf[:, :, kc] = vh.T
            sf[:, kc] = s
    theta_f = np.zeros((cu, cv, n3), dtype=complex)
    idx = np.arange(q)
    theta_f[idx, idx, :] = sf
    u_t = np.fft.ifft(uf, axis=2).real
    v_t = np.fft.ifft(vf, axis=2).real
    theta_t = np.fft.ifft(theta_f, axis=2).real
    fiber_norms = np.linalg.norm(sf, axis=1) / np.sqrt(n3)
    return TSVDFactors(u=u_t, theta=theta_t, v=v_t, fiber_norms=fiber_norms)


def tubal_rank(t: np.ndarray, tol: float = 1e-8) -> int:
    """Number of theta fibers above tol relative to the largest fiber."""
    fibers = tsvd(t, full=False).fiber_norms
    if fibers.size == 0 or fibers[0] <= 0.0:
        return 0
    return int(np.count_nonzero(fibers > tol * fibers[0]))


def best_rank_r(t: np.ndarray, r: int) -> np.ndarray:
    """Best tubal-rank-r approximation: truncate the t-SVD at r fibers."""
    t = _check3(t)
    n1, n2, n3 = t.shape
    q = min(n1, n2)
    if not 1 <= r <= q:
        raise ValueError(f"rank r={r} outside 1..min(n1,n2)={q}")
    ft = np.fft.fft(t, axis=2)
    out = np.empty_like(ft)
    for k in _half_indices(n3):
        u, s, vh = np.linalg.svd(ft[:, :, k], full_matrices=False)
        rec = (u[:, :r] * s[:r]) @ vh[:r]
        out[:, :, k] = rec
        kc = (n3 - k) % n3
        if kc != k:
            out[:, :, kc] = rec.conj()
    return np.fft.ifft(out, axis=2).real


def tnn(t: np.ndarray) -> float:
    """Tensor nuclear norm: sum of nuclear norms of all Fourier slices."""
    t = _check3(t)
    ft = np.moveaxis(np.fft.fft(t, axis=2), 2, 0)
    s = np.linalg.svd(ft, compute_uv=False)
    return float(np.sum(s))


def tinv(t: np.ndarray, regularize: bool = False) -> np.ndarray:
    """Tensor inverse via per-slice matrix inversion.

    A slice whose condition exceeds 1/RCOND_SINGULAR raises
    SingularSliceError unless regularize=True, in which case the slice is
    shifted by REG_EPS * (largest singular value) * I and a
    RegularizedInverseWarning is emitted.
    """
    t = _check3(t)
    n1, n2, n3 = t.shape
    if n1 != n2:
        raise ValueError(f"tensor inverse needs square frontal slices, got {t.shape}")
    ft = np.fft.fft(t, axis=2)
    out = np.empty_like(ft)
    flagged = False
    eye = np.eye(n1)
    for k in range(n3):
        m = ft[:, :, k]
        sv = np.linalg.svd(m, compute_uv=False)
        smax, smin = sv[0], sv[-1]
        if smax == 0.0 or smin < RCOND_SINGULAR * smax:
            if not regularize:
                cond = np.inf if smin == 0.0 else smax / smin
                raise SingularSliceError(k, cond)
            m = m + (REG_EPS * max(smax, np.finfo(float).tiny)) * eye
            flagged = True
        out[:, :, k] = np.linalg.inv(m)
    if flagged:
        warnings.warn(
            "near-singular slices were regularized during tensor inversion",
            RegularizedInverseWarning,
            stacklevel=2,
        )
    return np.fft.ifft(out, axis=2).real


def _slice_project(
    uk: np.ndarray, xk: np.ndarray, regularize: bool
) -> tuple[np.ndarray, bool]:
    """Project the columns of xk onto span(uk) via the normal equations."""
    g = uk.conj().T @ uk
    rhs = uk.conj().T @ xk
    sv = np.linalg.svd(g, compute_uv=False)
    smax, smin = (sv[0], sv[-1]) if sv.size else (0.0, 0.0)
    flagged = False
    if smax == 0.0 or smin < RCOND_SINGULAR * smax:
        if not regularize:
            cond = np.inf if smin == 0.0 else smax / smin
            raise SingularSliceError(0, cond)
        g = g + (REG_EPS * max(smax, np.finfo(float).tiny)) * np.eye(g.shape[0])
        flagged = True
    return uk @ np.linalg.solve(g, rhs), flagged


def tproj(u: np.ndarray, x: np.ndarray, regularize: bool = True) -> np.ndarray:
    """Apply the projector u * (u^T * u)^-1 * u^T onto the t-span of u.

    An empty basis (zero lateral slices) projects everything to zero.  Near
    singular Gram slices are regularized (with a warning) by default since
    mid-run subspace estimates routinely get ill-conditioned.
    """
    u = np.asarray(u)
    x = _check3(x, "projection target")
    if u.ndim != 3:
        raise ValueError(f"basis must be a third-order array, got shape {u.shape}")
    if u.shape[1] == 0:
        return np.zeros_like(x, dtype=float)
    u = _check3(u, "basis")
    if u.shape[0] != x.shape[0] or u.shape[2] != x.shape[2]:
        raise ValueError(
            f"basis shape {u.shape} incompatible with target shape {x.shape}"
        )
    fu = np.fft.fft(u, axis=2)
    fx = np.fft.fft(x, axis=2)
    out = np.empty_like(fx)
    n3 = x.shape[2]
    flagged = False
    for k in _half_indices(n3):
        try:
            pk, fl = _slice_project(fu[:, :, k], fx[:, :, k], regularize)
        except SingularSliceError as exc:
            raise SingularSliceError(k, exc.cond) from None
        flagged = flagged or fl
        out[:, :, k] = pk
        kc = (n3 - k) % n3
        if kc != k:
            out[:, :, kc] = pk.conj()
    if flagged:
        warnings.warn(
            "near-singular Gram slices were regularized during projection",
            RegularizedInverseWarning,
            stacklevel=2,
        )
    return np.fft.ifft(out, axis=2).real


def _orthonormal_slices(f: np.ndarray) -> np.ndarray:
    """Orthonormalize each (already Fourier-domain) slice by economy QR."""
    out = np.empty_like(f)
    r = f.shape[1]
    eye = np.eye(r)
    for k in range(f.shape[2]):
        g = f[:, :, k].conj().T @ f[:, :, k]
        if np.max(np.abs(g - eye)) <= 1e-8:
            out[:, :, k] = f[:, :, k]
        else:
            out[:, :, k], _ = np.linalg.qr(f[:, :, k])
    return out


def coherence(factor: np.ndarray) -> float:
    """Tensor-column incoherence of an n x r x n3 basis, in [1, n/r].

    Measures how concentrated the basis is on individual rows: the maximum
    squared row norm over all Fourier slices, scaled by n/r.  Slices are
    orthonormalized first if they are not already.
    """
    factor = _check3(factor, "factor")
    n, r, _ = factor.shape
    if r > n:
        raise ValueError(f"factor has more columns than rows: {factor.shape}")
    f = _orthonormal_slices(np.fft.fft(factor, axis=2))
    row_energy = np.sum(np.abs(f) ** 2, axis=1)  # (n, n3)
    return float(n / r * np.max(row_energy))


def max_column_energy(factor: np.ndarray) -> float:
    """Largest squared column norm over the factor's Fourier slices.

    For a t-orthogonal factor every column has unit norm in every slice, so
    the value is exactly 1; heavier values flag energy concentrated on few
    tensor rows of the transposed factor.
    """
    factor = _check3(factor, "factor")
    f = np.fft.fft(factor, axis=2)
    col_energy = np.sum(np.abs(f) ** 2, axis=0)  # (r, n3)
    return float(np.max(col_energy)) if col_energy.size else 0.0
