"""
Shared Response Model service.

Fits min_{W_i, S} sum_i ||X_i - W_i S||_F^2 subject to W_i^T W_i = I_k by
deterministic alternating minimization: an orthogonal Procrustes step per
network followed by averaging for S. Both steps solve their subproblem
exactly, so the objective never increases.
"""

import logging
import time
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from core.errors import (
    DimensionMismatch, KTooLarge, NetworkCountMismatch, RsmMismatch,
    DegenerateSpectrum, DegenerateColumn, ExampleCountMismatch, SpecValidationError
)
from core.matcore import (
    Seed, as_matrix, thin_svd, standardize_columns, orthonormality_error
)
from core.metrics import MetricsCollector
from core.models import ActivityMatrix, SrmModel
import config

logger = logging.getLogger(__name__)

MatrixLike = Union[ActivityMatrix, np.ndarray]

# Smallest-to-largest singular value ratio below which a Procrustes step is
# reported as rank-deficient
RANK_DEFICIENCY_RATIO = 1e-10

INIT_METHODS = ("svd", "random")


def _prepare(mats: Sequence[MatrixLike], standardize: bool) -> List[np.ndarray]:
    prepared = []
    for i, a in enumerate(mats):
        data = a.data if isinstance(a, ActivityMatrix) else as_matrix(a, f"matrix {i}")
        if standardize:
            try:
                data = standardize_columns(data)
            except DegenerateColumn as e:
                network = a.network_id if isinstance(a, ActivityMatrix) else str(i)
                raise e.for_network(network) from e
        prepared.append(data)
    return prepared


def _network_ids(mats: Sequence[MatrixLike]) -> List[str]:
    return [a.network_id if isinstance(a, ActivityMatrix) else str(i) for i, a in enumerate(mats)]


def procrustes(x: np.ndarray, s: np.ndarray) -> Tuple[np.ndarray, int]:
    """
    Orthogonal Procrustes: W = argmin ||x - W s||_F over W^T W = I_k.

    Returns:
        (W, missing_rank); W = U V^T from the thin SVD of x s^T and
        missing_rank counts its singular values below RANK_DEFICIENCY_RATIO
        times the largest. The SVD still returns complete orthonormal bases,
        so W stays orthonormal when missing_rank > 0.
    """
    svd = thin_svd(x @ s.T)
    top = svd.sigma[0] if svd.sigma.size else 0.0
    if top == 0.0:
        return svd.u @ svd.vt, int(svd.sigma.size)
    return svd.u @ svd.vt, int(np.sum(svd.sigma <= RANK_DEFICIENCY_RATIO * top))


def _objective(xs: Sequence[np.ndarray], ws: Sequence[np.ndarray], s: np.ndarray) -> float:
    total = 0.0
    for x, w in zip(xs, ws):
        residual = x - w @ s
        total += float(np.sum(residual * residual))
    return total


def _mean_projection(xs: Sequence[np.ndarray], ws: Sequence[np.ndarray]) -> np.ndarray:
    # Fixed summation order keeps the S-update reproducible
    total = np.zeros((ws[0].shape[1], xs[0].shape[1]))
    for x, w in zip(xs, ws):
        total += w.T @ x
    return total / len(xs)


def _resolve_k(units: Sequence[int], examples: int, k: Optional[int]) -> int:
    limit = min(min(units), examples)
    if k is None:
        return limit
    if k < 1:
        raise KTooLarge(f"k must be >= 1, got {k}")
    if k > min(units):
        raise KTooLarge(f"k={k} exceeds the smallest unit count min n_i = {min(units)}")
    if k > examples:
        raise KTooLarge(f"k={k} exceeds the example count m = {examples}")
    return k


def fit_srm(
    mats: Sequence[MatrixLike],
    k: Optional[int] = None,
    max_iters: int = config.MAX_ITERS,
    tol: float = config.TOL,
    seed: Seed = None,
    init: str = "svd",
    standardize: bool = True,
    metrics: Optional[MetricsCollector] = None,
    threads: int = 1,
) -> SrmModel:
    """
    Fit the shared response model.

    Args:
        mats: N >= 2 activity matrices sharing the example count m
        k: Shared dimension (default min n_i, capped at m)
        max_iters: Iteration cap
        tol: Stop when |obj_t - obj_{t-1}| / obj_0 < tol
        seed: Only used by init='random'
        init: 'svd' starts from Sigma V^T (top k) of the first network,
            'random' from a Gaussian S
        standardize: z-score columns of every X_i before fitting
        metrics: Optional collector for fit counters and timings
        threads: Procrustes steps run on this many joblib threads; the
            result does not depend on it

    Returns:
        SrmModel; non-convergence is reported via `converged`, not raised
    """
    if len(mats) < 2:
        raise DimensionMismatch(f"SRM needs at least 2 networks, got {len(mats)}")
    if init not in INIT_METHODS:
        raise SpecValidationError(f"unknown init '{init}' (expected one of {', '.join(INIT_METHODS)})")
    if max_iters < 1:
        raise SpecValidationError(f"max_iters must be >= 1, got {max_iters}")
    if tol < 0:
        raise SpecValidationError(f"tol must be >= 0, got {tol}")
    if threads < 1:
        raise SpecValidationError(f"threads must be >= 1, got {threads}")

    xs = _prepare(mats, standardize)
    ids = _network_ids(mats)
    examples = xs[0].shape[1]
    for network_id, x in zip(ids, xs):
        if x.shape[1] != examples:
            raise DimensionMismatch(
                f"network '{network_id}' has {x.shape[1]} examples, expected {examples}"
            )
    k = _resolve_k([x.shape[0] for x in xs], examples, k)
    layer_id = mats[0].layer_id if isinstance(mats[0], ActivityMatrix) else ""

    started = time.perf_counter()
    energy = sum(float(np.sum(x * x)) for x in xs)

    if init == "svd":
        first = thin_svd(xs[0], rank=k)
        s = first.sigma[:, None] * first.vt
    else:
        s = np.random.default_rng(seed).standard_normal((k, examples))

    # column-centred X_i (k = n_i) loses exactly one rank to the ones vector
    centring_loss = [int(standardize and k == x.shape[0]) for x in xs]

    trace: List[float] = []
    ortho_trace: List[float] = []
    deficient_steps = 0
    centring_steps = 0
    converged = False
    ws: List[np.ndarray] = []

    pool = Parallel(n_jobs=threads, backend="threading") if threads > 1 else None

    for iteration in range(max_iters):
        if pool is None:
            steps = [procrustes(x, s) for x in xs]
        else:
            steps = pool(delayed(procrustes)(x, s) for x in xs)

        ws = []
        for (w, missing), expected in zip(steps, centring_loss):
            if missing > expected:
                deficient_steps += 1
            elif missing:
                centring_steps += 1
            ws.append(w)
        ortho_trace.append(max(orthonormality_error(w) for w in ws))

        s = _mean_projection(xs, ws)
        objective = _objective(xs, ws, s)
        trace.append(objective)

        if objective <= config.PERFECT_FIT_TOL * energy:
            converged = True
            break
        if len(trace) >= 2 and trace[0] > 0 and abs(trace[-2] - objective) / trace[0] < tol:
            converged = True
            break

    warnings = []
    if deficient_steps:
        warnings.append(
            f"{deficient_steps} Procrustes step(s) were rank-deficient "
            f"(k={k} exceeds the rank of X_i S^T); bases completed deterministically"
        )
        logger.warning(warnings[-1])
    if centring_steps:
        logger.debug(
            f"{centring_steps} Procrustes step(s) lacked the one rank removed by column centring (k={k})"
        )

    elapsed = time.perf_counter() - started
    if metrics is not None:
        metrics.inc_counter("srm_fits_total")
        metrics.inc_counter("srm_iterations_total", len(trace))
        metrics.observe_histogram("srm_fit_duration_seconds", elapsed)

    logger.info(
        f"SRM fit: N={len(xs)} k={k} m={examples} iterations={len(trace)} "
        f"objective={trace[-1]:.6e} converged={converged} ({elapsed:.3f}s)"
    )
    if not converged:
        logger.warning(f"SRM did not converge within {max_iters} iterations")

    return SrmModel(
        k=k,
        transforms=ws,
        shared=s,
        fit_trace=trace,
        converged=converged,
        network_ids=ids,
        layer_id=layer_id,
        standardized=standardize,
        iterations=len(trace),
        tol=tol,
        max_iters=max_iters,
        init=init,
        seed=seed if isinstance(seed, int) else None,
        orthonormality_trace=ortho_trace,
        warnings=warnings,
    )


def _check_against_model(model: SrmModel, mats: Sequence[MatrixLike]) -> List[np.ndarray]:
    if len(mats) != model.networks:
        raise NetworkCountMismatch(f"model has {model.networks} networks, got {len(mats)} matrices")

    for i, (a, expected_id, w) in enumerate(zip(mats, model.network_ids, model.transforms)):
        if isinstance(a, ActivityMatrix) and a.network_id != expected_id:
            raise NetworkCountMismatch(
                f"position {i} holds network '{a.network_id}', model expects '{expected_id}'"
            )
        units = a.units if isinstance(a, ActivityMatrix) else np.shape(a)[0]
        if units != w.shape[0]:
            raise DimensionMismatch(
                f"network '{expected_id}' has {units} units, model transform expects {w.shape[0]}"
            )

    xs = _prepare(mats, model.standardized)
    examples = xs[0].shape[1]
    for network_id, x in zip(model.network_ids, xs):
        if x.shape[1] != examples:
            raise ExampleCountMismatch(
                f"network '{network_id}' has {x.shape[1]} examples, expected {examples}"
            )
    return xs


def transform(model: SrmModel, mats: Sequence[MatrixLike]) -> List[np.ndarray]:
    """Project (held-out) activity into the shared space: W_i^T X_i."""
    xs = _check_against_model(model, mats)
    return [w.T @ x for w, x in zip(model.transforms, xs)]


def variance_explained(model: SrmModel, mats: Sequence[MatrixLike]) -> float:
    """
    1 - sum_i ||X_i - W_i S*||^2 / sum_i ||X_i||^2 where S* is the mean
    shared response of the given matrices.
    """
    xs = _check_against_model(model, mats)
    s_star = _mean_projection(xs, model.transforms)
    energy = sum(float(np.sum(x * x)) for x in xs)
    return 1.0 - _objective(xs, model.transforms, s_star) / energy


def srm_objective(model: SrmModel, mats: Sequence[MatrixLike]) -> float:
    """Objective value at the model's W_i and S on the given data."""
    xs = _check_against_model(model, mats)
    if xs[0].shape[1] != model.shared.shape[1]:
        raise DimensionMismatch(
            f"data has {xs[0].shape[1]} examples, shared response has {model.shared.shape[1]}"
        )
    return _objective(xs, model.transforms, model.shared)


def shared_gram_deviation(model: SrmModel, mats: Sequence[MatrixLike]) -> float:
    """max_i ||S^T S - X_i^T X_i||_max; zero whenever the fit is exact."""
    xs = _check_against_model(model, mats)
    gram = model.shared.T @ model.shared
    return max(float(np.max(np.abs(gram - x.T @ x))) for x in xs)


def _nonzero_spectrum(a: np.ndarray) -> np.ndarray:
    sigma = thin_svd(a).sigma
    if not sigma.size or sigma[0] == 0:
        return sigma[:0]
    return sigma[sigma > max(a.shape) * np.finfo(np.float64).eps * sigma[0]]


def _require_distinct(sigma: np.ndarray, name: str):
    gaps = -np.diff(sigma)
    if gaps.size and float(np.min(gaps)) < config.SPECTRUM_GAP_TOL:
        raise DegenerateSpectrum(
            f"singular values of {name} not distinct (min gap {float(np.min(gaps)):.3e}); "
            f"construction is not unique"
        )


def build_srm_from_rsm_equal(
    a: MatrixLike,
    b: MatrixLike,
    standardize: bool = True,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Construct an exact two-network SRM solution from compact SVDs when the
    two RSMs coincide: W_a = U_a, W_b = U_b (signs matched), S = Sigma V^T.

    Raises:
        RsmMismatch: the RSMs differ by more than RSM_MATCH_TOL
        DegenerateSpectrum: repeated singular values make V non-unique
    """
    za, zb = _prepare([a, b], standardize)
    if za.shape[1] != zb.shape[1]:
        raise ExampleCountMismatch(f"example counts differ: {za.shape[1]} vs {zb.shape[1]}")
    if standardize:
        # standardizing can hide a repeated spectrum (diag(1, 1) centres to rank 1)
        raw = a.data if isinstance(a, ActivityMatrix) else as_matrix(a, "matrix 0")
        _require_distinct(_nonzero_spectrum(raw), "a")

    gap = float(np.max(np.abs(za.T @ za - zb.T @ zb)))
    if gap > config.RSM_MATCH_TOL:
        raise RsmMismatch(f"RSMs differ by {gap:.3e} (> {config.RSM_MATCH_TOL:g})")

    svd_a, svd_b = thin_svd(za), thin_svd(zb)
    eps = np.finfo(np.float64).eps
    cutoff_a = max(za.shape) * eps * svd_a.sigma[0]
    cutoff_b = max(zb.shape) * eps * svd_b.sigma[0]
    rank = int(np.sum(svd_a.sigma > cutoff_a))
    if rank != int(np.sum(svd_b.sigma > cutoff_b)):
        raise RsmMismatch("numerical ranks of the two matrices differ")
    if rank == 0:
        raise DegenerateSpectrum("both matrices are numerically zero")

    sigma = svd_a.sigma[:rank]
    _require_distinct(sigma, "standardized a")

    vt = svd_a.vt[:rank]
    signs = np.sign(np.sum(svd_b.vt[:rank] * vt, axis=1))
    signs[signs == 0] = 1.0

    w_a = svd_a.u[:, :rank]
    w_b = svd_b.u[:, :rank] * signs
    s = sigma[:, None] * vt

    for name, z, w in (("a", za, w_a), ("b", zb, w_b)):
        residual = float(np.linalg.norm(z - w @ s))
        if residual > 1e-6 * float(np.linalg.norm(z)):
            raise DegenerateSpectrum(
                f"construction does not reproduce {name} (residual {residual:.3e})"
            )

    return w_a, w_b, s
