"""
Scalar statistics used by evaluation: Pearson and Spearman correlation and
percentile bootstrap confidence intervals.
"""

import logging
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from core.errors import LengthMismatch, ZeroVariance, EmptyInput, SpecValidationError
from core.matcore import Seed
from core.models import BootstrapCi
import config

logger = logging.getLogger(__name__)


def _paired_vectors(x: Sequence[float], y: Sequence[float]):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise LengthMismatch(f"vectors differ in length: {x.size} vs {y.size}")
    if x.size < 2:
        raise LengthMismatch(f"correlation needs at least 2 values, got {x.size}")
    return x, y


def _centred(v: np.ndarray, name: str) -> np.ndarray:
    c = v - v.mean()
    if not np.any(c):
        raise ZeroVariance(f"{name} is constant; correlation is undefined")
    return c


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation, clamped to [-1, 1]."""
    x, y = _paired_vectors(x, y)
    xc = _centred(x, "x")
    yc = _centred(y, "y")
    r = float(np.dot(xc, yc) / np.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))
    return min(1.0, max(-1.0, r))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of fractional ranks; ties share their average rank."""
    x, y = _paired_vectors(x, y)
    return pearson(rankdata(x, method='average'), rankdata(y, method='average'))


def correlate(x: Sequence[float], y: Sequence[float], method: str = "pearson") -> float:
    if method == "pearson":
        return pearson(x, y)
    if method == "spearman":
        return spearman(x, y)
    raise SpecValidationError(f"unknown correlation method '{method}' (expected pearson or spearman)")


def bootstrap_ci(
    samples: Sequence[float],
    level: float = config.CI_LEVEL,
    resamples: int = config.BOOTSTRAP_RESAMPLES,
    seed: Seed = config.DEFAULT_SEED,
    axis: str = "samples",
) -> BootstrapCi:
    """
    Percentile bootstrap confidence interval of the mean.

    Resamples with replacement, averages each resample and takes the
    (1-level)/2 and 1-(1-level)/2 quantiles (linear interpolation).

    Args:
        samples: Observed values
        level: Confidence level in (0, 1)
        resamples: Number of bootstrap resamples
        seed: Random seed; identical seeds give identical intervals
        axis: Label of what was resampled (runs, network_pairs, ...)

    Returns:
        BootstrapCi; `degenerate` is set when the interval has zero width
        because of a single sample or all-equal samples
    """
    values = np.asarray(samples, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptyInput("bootstrap needs at least one sample")
    if resamples < 1:
        raise SpecValidationError(f"resamples must be >= 1, got {resamples}")
    if not 0 < level < 1:
        raise SpecValidationError(f"level must be in (0, 1), got {level}")

    lo_bound, hi_bound = float(values.min()), float(values.max())

    if values.size == 1 or lo_bound == hi_bound:
        logger.debug(f"Degenerate bootstrap over {values.size} sample(s) on axis '{axis}'")
        return BootstrapCi(
            mean=lo_bound, lo=lo_bound, hi=lo_bound, level=level,
            resamples=resamples, degenerate=True, axis=axis
        )

    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(resamples, values.size))
    means = values[idx].mean(axis=1)

    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])

    return BootstrapCi(
        mean=float(values.mean()),
        lo=float(np.clip(lo, lo_bound, hi_bound)),
        hi=float(np.clip(hi, lo_bound, hi_bound)),
        level=level,
        resamples=resamples,
        degenerate=False,
        axis=axis,
    )
