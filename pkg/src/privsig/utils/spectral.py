"""Dense symmetric linear algebra used by every solver.

The eigensolver is a cyclic Jacobi iteration: the matrices here are small
(a few dozen rows at most) and Jacobi gives accurate, deterministic
eigenvectors for symmetric input.
"""

import logging
import math
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import LinAlgError, cholesky

from privsig.config import DEFAULTS
from privsig.errors import NonConvergence, NotPositiveDefinite
from privsig.utils.arrays import Matrix, Vector

logger = logging.getLogger(__name__)

SortOrder = Literal["descending", "positives_first"]


class SpectralDecomposition(BaseModel):
    """Eigenvectors (columns of q), eigenvalues and inertia of a symmetric matrix."""

    model_config = ConfigDict(frozen=True)

    q: Matrix = Field(..., description="Orthonormal eigenvectors as columns")
    lam: Vector = Field(..., description="Eigenvalues in the requested order")
    n_pos: int = Field(..., ge=0)
    n_neg: int = Field(..., ge=0)
    n_zero: int = Field(..., ge=0)
    zero_tol: float = Field(..., ge=0, description="|lambda| <= zero_tol counts as zero")

    @property
    def dim(self) -> int:
        return int(self.lam.shape[0])

    @property
    def inertia(self) -> Tuple[int, int, int]:
        return self.n_pos, self.n_neg, self.n_zero

    def reconstruct(self) -> np.ndarray:
        return (self.q * self.lam) @ self.q.T

    def columns(self, mask: np.ndarray) -> np.ndarray:
        return self.q[:, mask]

    @property
    def positive_mask(self) -> np.ndarray:
        return self.lam > self.zero_tol

    @property
    def negative_mask(self) -> np.ndarray:
        return self.lam < -self.zero_tol

    @property
    def nonnegative_mask(self) -> np.ndarray:
        return self.lam >= -self.zero_tol


def as_sym(m) -> np.ndarray:
    """Return a float copy of m made exactly symmetric."""
    arr = np.array(m, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return (arr + arr.T) / 2.0


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _rotation(app: float, arr: float, apr: float) -> Tuple[float, float]:
    """(c, s) of the rotation that zeroes a[p, r]."""
    h = arr - app
    if abs(h) + 100.0 * abs(apr) == abs(h):
        # |apr| below the resolution of h: tan(angle) = apr / h without forming theta**2
        t = apr / h
    else:
        theta = 0.5 * h / apr
        t = 1.0 / (abs(theta) + math.hypot(theta, 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / math.hypot(t, 1.0)
    return c, t * c


def _jacobi(a: np.ndarray, max_sweeps: int, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), v

    target = tol * scale
    for sweep in range(max_sweeps + 1):
        off = _off_norm(a)
        if off <= target:
            logger.debug("Jacobi converged after %d sweeps (off=%.3e)", sweep, off)
            return np.diag(a).copy(), v
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p, r]
                if apr == 0.0:
                    continue
                c, s = _rotation(a[p, p], a[r, r], apr)

                col_p = a[:, p].copy()
                col_r = a[:, r].copy()
                a[:, p] = c * col_p - s * col_r
                a[:, r] = s * col_p + c * col_r
                row_p = a[p, :].copy()
                row_r = a[r, :].copy()
                a[p, :] = c * row_p - s * row_r
                a[r, :] = s * row_p + c * row_r
                a[p, r] = a[r, p] = 0.0

                vec_p = v[:, p].copy()
                vec_r = v[:, r].copy()
                v[:, p] = c * vec_p - s * vec_r
                v[:, r] = s * vec_p + c * vec_r

    raise NonConvergence(
        f"Jacobi did not reach off-diagonal norm {target:.3e} within {max_sweeps} sweeps",
        iterations=max_sweeps,
        residual=off,
    )


def _fix_signs(q: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(q), axis=0)
    signs = np.sign(q[idx, np.arange(q.shape[1])])
    signs[signs == 0] = 1.0
    return q * signs


def eig_sym(
    m,
    sort: SortOrder = "descending",
    zero_tol: Optional[float] = None,
) -> SpectralDecomposition:
    """
    Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Args:
        m: Symmetric matrix (symmetrized on entry)
        sort: "descending" sorts by value; "positives_first" puts
            eigenvalues above zero_tol first (descending), then the
            negative ones (most negative first), then the zeros
        zero_tol: Absolute zero threshold; defaults to 1e-10 * max|lambda|

    Returns:
        SpectralDecomposition with q @ diag(lam) @ q.T == m

    Raises:
        NonConvergence: If the off-diagonal mass does not vanish in time
    """
    a = as_sym(m)
    lam, q = _jacobi(a.copy(), DEFAULTS.jacobi_max_sweeps, DEFAULTS.jacobi_tol)

    if zero_tol is None:
        zero_tol = DEFAULTS.zero_tol_rel * float(np.max(np.abs(lam)))
    if zero_tol < 0:
        raise ValueError(f"zero_tol must be nonnegative, got {zero_tol}")

    pos = lam > zero_tol
    neg = lam < -zero_tol
    zero = ~(pos | neg)

    if sort == "descending":
        order = np.argsort(-lam, kind="stable")
    elif sort == "positives_first":
        idx = np.arange(lam.shape[0])
        order = np.concatenate([
            idx[pos][np.argsort(-lam[pos], kind="stable")],
            idx[neg][np.argsort(lam[neg], kind="stable")],
            idx[zero][np.argsort(-lam[zero], kind="stable")],
        ])
    else:
        raise ValueError(f"unknown sort order: {sort}")

    return SpectralDecomposition(
        q=_fix_signs(q[:, order]),
        lam=lam[order],
        n_pos=int(pos.sum()),
        n_neg=int(neg.sum()),
        n_zero=int(zero.sum()),
        zero_tol=float(zero_tol),
    )


def _pd_spectrum(m) -> SpectralDecomposition:
    dec = eig_sym(m)
    floor = DEFAULTS.pd_rel_tol * float(np.max(np.abs(dec.lam)))
    smallest = float(dec.lam[-1])
    if smallest <= floor:
        raise NotPositiveDefinite(
            f"matrix is not positive definite (eigenvalue {smallest:.6g})",
            eigenvalue=smallest,
        )
    return dec


def sqrt_pd(m) -> np.ndarray:
    """Symmetric square root S of a positive definite matrix (S @ S == m)."""
    dec = _pd_spectrum(m)
    return as_sym((dec.q * np.sqrt(dec.lam)) @ dec.q.T)


def inv_sqrt_pd(m) -> np.ndarray:
    """Symmetric S with S @ m @ S == I."""
    dec = _pd_spectrum(m)
    return as_sym((dec.q / np.sqrt(dec.lam)) @ dec.q.T)


def cholesky_pd(m) -> np.ndarray:
    """Lower-triangular L with L @ L.T == m."""
    a = as_sym(m)
    try:
        return cholesky(a, lower=True)
    except LinAlgError as e:
        smallest = float(np.linalg.eigvalsh(a)[0])
        raise NotPositiveDefinite(
            f"Cholesky factorization failed: {e}", eigenvalue=smallest
        ) from e


def pinv_sym(m, rel_cutoff: Optional[float] = None) -> Tuple[np.ndarray, bool]:
    """
    Spectral pseudo-inverse of a symmetric positive semidefinite matrix.

    Returns:
        (pseudo-inverse, truncated) where truncated tells whether any
        direction fell below rel_cutoff * max|lambda| and was dropped
    """
    if rel_cutoff is None:
        rel_cutoff = DEFAULTS.pinv_rel_cutoff
    dec = eig_sym(m)
    top = float(np.max(np.abs(dec.lam)))
    keep = dec.lam > rel_cutoff * top if top > 0 else np.zeros_like(dec.lam, dtype=bool)
    qk = dec.q[:, keep]
    inv = (qk / dec.lam[keep]) @ qk.T
    return as_sym(inv), bool((~keep).any())


def logdet_pd(m) -> float:
    """Log-determinant of a positive definite matrix."""
    dec = _pd_spectrum(m)
    return float(np.sum(np.log(dec.lam)))
