"""
Representational similarity matrices and the alignment metrics built on
them.

Native-space RSMs are column-wise Pearson correlations. Shared-space RSMs
are Gram matrices of column-normalized shared responses: the shared basis is
an arbitrary rotation, so re-centring across its dimensions would mix in a
rotation-dependent mean.
"""

import logging
from itertools import combinations
from typing import List, Sequence, Tuple, Union

import numpy as np

from core.errors import (
    EmptyList, SizeMismatch, ExampleCountMismatch, DegenerateColumn, SpecValidationError
)
from core.matcore import standardize_columns, normalize_columns, as_matrix
from core.models import ActivityMatrix, Rsm, RSM_KINDS
from services.stats_service import correlate, pearson

logger = logging.getLogger(__name__)

MatrixLike = Union[ActivityMatrix, np.ndarray]


def _data(a: MatrixLike) -> np.ndarray:
    return a.data if isinstance(a, ActivityMatrix) else as_matrix(a)


def _standardized(a: MatrixLike) -> np.ndarray:
    try:
        return standardize_columns(_data(a))
    except DegenerateColumn as e:
        if isinstance(a, ActivityMatrix):
            raise e.for_network(a.network_id) from e
        raise


def _cross(za: np.ndarray, zb: np.ndarray) -> np.ndarray:
    return np.clip(za.T @ zb, -1.0, 1.0)


def within_rsm(a: MatrixLike) -> Rsm:
    """Column-wise Pearson correlation matrix of `a` (m x m)."""
    # Two separately standardized copies keep this on the same code path
    # as inter_rsm(a, a), so both return bit-identical values
    return Rsm(values=_cross(_standardized(a), _standardized(a)), kind="within")


def inter_rsm(a: MatrixLike, b: MatrixLike) -> Rsm:
    """Entry (i, j) is the Pearson correlation of column i of a with column j of b."""
    da, db = _data(a), _data(b)
    if da.shape[1] != db.shape[1]:
        raise ExampleCountMismatch(f"example counts differ: {da.shape[1]} vs {db.shape[1]}")
    return Rsm(values=_cross(_standardized(a), _standardized(b)), kind="inter")


def shared_rsm(y) -> Rsm:
    """Gram matrix of unit-norm columns of a shared-space response (k x m)."""
    z = normalize_columns(y)
    return Rsm(values=_cross(z, z.copy()), kind="within")


def average_rsm(rsms: Sequence[Rsm]) -> Rsm:
    """Entrywise mean of equally sized RSMs of one kind."""
    if not rsms:
        raise EmptyList("cannot average an empty list of RSMs")

    size, kind = rsms[0].size, rsms[0].kind
    for i, r in enumerate(rsms):
        if r.size != size or r.kind != kind:
            raise SizeMismatch(
                f"RSM {i} is {r.kind} {r.size}x{r.size}, expected {kind} {size}x{size}"
            )

    total = np.zeros((size, size))
    for r in rsms:
        total += r.values
    return Rsm(values=total / len(rsms), kind=kind)


def mean_within_rsm(mats: Sequence[MatrixLike]) -> Rsm:
    return average_rsm([within_rsm(a) for a in mats])


def _pairwise_average(zs: List[np.ndarray]) -> np.ndarray:
    # sum over ordered pairs i != j of z_i^T z_j = (sum z)^T (sum z) - sum z_i^T z_i
    n = len(zs)
    if n < 2:
        raise SizeMismatch(f"inter-network RSMs need >= 2 networks, got {n}")
    m = zs[0].shape[1]
    for i, z in enumerate(zs):
        if z.shape[1] != m:
            raise ExampleCountMismatch(f"network {i} has {z.shape[1]} examples, expected {m}")

    total = np.zeros_like(zs[0])
    diagonal = np.zeros((m, m))
    for z in zs:
        total += z
        diagonal += z.T @ z
    values = (total.T @ total - diagonal) / (n * (n - 1))
    return np.clip(values, -1.0, 1.0)


def average_inter_rsm(mats: Sequence[MatrixLike], space: str = "native") -> Rsm:
    """
    Inter-network RSM averaged over all ordered network pairs i != j.

    Args:
        mats: Activity (native) or shared-space responses, equal example count
        space: 'native' uses Pearson standardization, 'shared' uses
            column normalization only
    """
    if space == "native":
        zs = [_standardized(a) for a in mats]
    elif space == "shared":
        zs = [normalize_columns(_data(a)) for a in mats]
    else:
        raise SpecValidationError(f"unknown space '{space}' (expected native or shared)")
    return Rsm(values=_pairwise_average(zs), kind="inter")


def vectorize_rsm(r: Rsm) -> np.ndarray:
    """Strict upper triangle; inter RSMs are symmetrized first."""
    values = r.values
    if r.kind == "inter":
        values = (values + values.T) / 2.0
    rows, cols = np.triu_indices(r.size, k=1)
    return values[rows, cols]


def rsm_correlation(x: Rsm, y: Rsm, method: str = "pearson") -> float:
    """Correlation of the vectorized RSMs (see vectorize_rsm)."""
    if x.kind not in RSM_KINDS or y.kind not in RSM_KINDS:
        raise SpecValidationError(f"unknown RSM kinds '{x.kind}', '{y.kind}'")
    if x.size != y.size:
        raise SizeMismatch(f"RSM sizes differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise SizeMismatch(f"RSM correlation needs m >= 2, got {x.size}")
    return correlate(vectorize_rsm(x), vectorize_rsm(y), method)


def pairwise_wrsm_consistency(mats: Sequence[MatrixLike]) -> Tuple[float, List[float]]:
    """
    Pearson correlation of vectorized within-network RSMs for every unordered
    pair, in fixed (i, j) order.

    Returns:
        (mean correlation, per-pair correlations)
    """
    if len(mats) < 2:
        raise SizeMismatch(f"consistency needs >= 2 networks, got {len(mats)}")
    m = _data(mats[0]).shape[1]
    for a in mats:
        if _data(a).shape[1] != m:
            raise ExampleCountMismatch(f"example counts differ: {_data(a).shape[1]} vs {m}")

    vectors = [vectorize_rsm(within_rsm(a)) for a in mats]
    pairs = [pearson(vectors[i], vectors[j]) for i, j in combinations(range(len(vectors)), 2)]
    return float(np.mean(pairs)), pairs


def pairwise_inter_consistency(
    shared: Sequence[np.ndarray],
    reference: Rsm,
    method: str = "pearson",
) -> List[float]:
    """
    For each unordered pair of shared-space responses, correlation between
    their inter-network RSM (symmetrized over both orders) and `reference`.
    """
    zs = [normalize_columns(y) for y in shared]
    values = []
    for i, j in combinations(range(len(zs)), 2):
        pair = Rsm(values=np.clip(zs[i].T @ zs[j], -1.0, 1.0), kind="inter")
        values.append(rsm_correlation(pair, reference, method))
    return values
