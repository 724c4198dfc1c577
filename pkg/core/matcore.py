"""
Dense real-matrix primitives: thin SVD, random transforms, column
standardization and norms.

All functions are pure; inputs are never modified.
"""

import logging
from typing import Optional, Union

import numpy as np
from scipy import linalg

from core.errors import InvalidMatrix, DegenerateColumn, DimensionMismatch
from core.models import ThinSvd
import config

logger = logging.getLogger(__name__)

Seed = Union[None, int, np.random.SeedSequence, np.random.Generator]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return `a` as a finite 2-D float64 array with at least one row and column."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrix(f"{name} contains NaN or Inf entries")
    return arr


def _fix_signs(u: np.ndarray, vt: np.ndarray):
    # Largest-magnitude entry of every left singular vector made positive
    pivots = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[pivots, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def thin_svd(a, rank: Optional[int] = None) -> ThinSvd:
    """
    Compact SVD with deterministic signs.

    Args:
        a: n x m matrix
        rank: Keep only the leading `rank` triplets (default min(n, m))

    Returns:
        ThinSvd whose u columns / vt rows are orthonormal
    """
    a = as_matrix(a)
    full_rank = min(a.shape)
    if rank is not None and not 1 <= rank <= full_rank:
        raise DimensionMismatch(f"rank {rank} outside [1, {full_rank}] for a {a.shape[0]}x{a.shape[1]} matrix")

    try:
        u, sigma, vt = linalg.svd(a, full_matrices=False, lapack_driver='gesdd')
    except linalg.LinAlgError:
        logger.warning("gesdd did not converge, retrying with gesvd")
        u, sigma, vt = linalg.svd(a, full_matrices=False, lapack_driver='gesvd')

    u, vt = _fix_signs(u, vt)

    if rank is not None:
        u, sigma, vt = u[:, :rank], sigma[:rank], vt[:rank, :]

    return ThinSvd(u=u, sigma=sigma, vt=vt)


def orthonormality_error(w: np.ndarray) -> float:
    """max |W^T W - I| for a matrix with orthonormal columns."""
    gram = w.T @ w
    return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


def random_orthogonal(n: int, seed: Seed = None, preserve_mean: bool = False) -> np.ndarray:
    """
    Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
    the signs of R's diagonal folded into Q).

    With preserve_mean=True the matrix is Haar over the subgroup that fixes
    the all-ones vector: a Haar O(n-1) element acting on the Helmert basis of
    the centred subspace. Such rotations leave column-wise Pearson
    correlations unchanged.
    """
    if n < 1:
        raise DimensionMismatch(f"orthogonal matrix size must be >= 1, got {n}")

    rng = np.random.default_rng(seed)

    if preserve_mean:
        if n == 1:
            return np.ones((1, 1))
        basis = linalg.helmert(n).T  # n x (n-1), orthonormal, orthogonal to ones
        inner = random_orthogonal(n - 1, rng)
        return basis @ inner @ basis.T + np.full((n, n), 1.0 / n)

    z = rng.standard_normal((n, n))
    q, r = linalg.qr(z)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def random_permutation(n: int, seed: Seed = None) -> np.ndarray:
    """Uniformly random permutation matrix P with P[i, perm[i]] = 1."""
    if n < 1:
        raise DimensionMismatch(f"permutation size must be >= 1, got {n}")

    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)  # Fisher-Yates
    p = np.zeros((n, n))
    p[np.arange(n), perm] = 1.0
    return p


def random_orthonormal_columns(n: int, k: int, seed: Seed = None) -> np.ndarray:
    """Random n x k matrix with orthonormal columns (first k Haar columns)."""
    if not 1 <= k <= n:
        raise DimensionMismatch(f"need 1 <= k <= n, got k={k}, n={n}")
    return random_orthogonal(n, seed)[:, :k]


def standardize_columns(a) -> np.ndarray:
    """
    Centre every column across rows and scale it to unit Euclidean norm, so
    that a^T a is the column-wise Pearson correlation matrix.

    Raises:
        DegenerateColumn: a column is constant
    """
    a = as_matrix(a)
    centred = a - a.mean(axis=0, keepdims=True)
    norms = np.linalg.norm(centred, axis=0)
    scale = np.maximum(np.max(np.abs(a), axis=0), 1.0)

    degenerate = np.flatnonzero(norms <= config.DEGENERATE_COLUMN_TOL * scale)
    if degenerate.size:
        raise DegenerateColumn(int(degenerate[0]))

    return centred / norms


def normalize_columns(a) -> np.ndarray:
    """Scale columns to unit norm without centring."""
    a = as_matrix(a)
    norms = np.linalg.norm(a, axis=0)
    scale = np.maximum(np.max(np.abs(a), axis=0), 1.0)
    degenerate = np.flatnonzero(norms <= config.DEGENERATE_COLUMN_TOL * scale)
    if degenerate.size:
        raise DegenerateColumn(int(degenerate[0]))
    return a / norms


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), 'fro'))
