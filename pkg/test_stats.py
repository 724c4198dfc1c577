"""
Tests for Pearson / Spearman correlation and percentile bootstrap intervals.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core.errors import EmptyInput, LengthMismatch, SpecValidationError, ZeroVariance
from services.stats_service import bootstrap_ci, correlate, pearson, spearman
from testing_support import expect_raises, main_for, rng


def test_pearson_identity_and_affine():
    x = np.array([0.3, 1.7, -2.0, 4.1])
    assert abs(pearson(x, x) - 1.0) < 1e-12
    assert abs(pearson(x, -2 * x + 3) + 1.0) < 1e-12


def test_pearson_hand_value():
    assert abs(pearson([1, 2, 3], [1, 3, 2]) - 0.5) < 1e-12


def test_pearson_symmetric_and_scale_invariant():
    x, y = rng(1).standard_normal((2, 50))
    r = pearson(x, y)
    assert abs(r - pearson(y, x)) < 1e-12
    assert abs(r - pearson(3 * x + 7, y)) < 1e-12
    assert abs(r + pearson(-x, y)) < 1e-12


def test_pearson_errors():
    with expect_raises(ZeroVariance):
        pearson([1, 1, 1], [1, 2, 3])
    with expect_raises(LengthMismatch):
        pearson([1, 2, 3], [1, 2])
    with expect_raises(LengthMismatch):
        pearson([1], [2])


def test_spearman_monotone_and_reversed():
    x = np.array([0.5, 2.0, 3.5, 10.0, 11.0])
    assert abs(spearman(x, np.exp(x)) - 1.0) < 1e-12
    assert abs(spearman(x, -x) + 1.0) < 1e-12


def test_spearman_hand_value():
    assert abs(spearman([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) < 1e-12


def test_spearman_ties_use_average_ranks():
    # ranks of y: (1, 2.5, 2.5, 4); Pearson with (1, 2, 3, 4) = 4.5 / sqrt(5 * 4.5)
    expected = 4.5 / np.sqrt(5 * 4.5)
    assert abs(spearman([1, 2, 3, 4], [10, 20, 20, 30]) - expected) < 1e-12


def test_correlate_dispatch():
    assert correlate([1, 2, 3], [1, 3, 2], "pearson") == pearson([1, 2, 3], [1, 3, 2])
    with expect_raises(SpecValidationError):
        correlate([1, 2], [2, 1], "kendall")


def test_bootstrap_all_equal_is_degenerate():
    ci = bootstrap_ci([0.7, 0.7, 0.7], resamples=100, seed=1)
    assert ci.degenerate
    assert ci.lo == ci.hi == ci.mean == 0.7


def test_bootstrap_single_sample():
    ci = bootstrap_ci([0.42], resamples=100, seed=1)
    assert ci.degenerate
    assert ci.lo == ci.hi == ci.mean == 0.42


def test_bootstrap_two_point_sample():
    ci = bootstrap_ci([0.0, 1.0], level=0.95, resamples=10000, seed=0)
    assert ci.mean == 0.5
    assert ci.lo <= 0.5 <= ci.hi
    # P(both resampled values are 0) = 1/4 > 2.5%, so the percentiles hit the sample range
    assert ci.lo == 0.0
    assert ci.hi == 1.0


def test_bootstrap_deterministic_and_bounded():
    samples = rng(2).normal(size=40)
    a = bootstrap_ci(samples, resamples=2000, seed=9, axis="runs")
    b = bootstrap_ci(samples, resamples=2000, seed=9, axis="runs")
    assert a == b
    assert samples.min() <= a.lo <= a.hi <= samples.max()
    assert a.lo <= a.mean <= a.hi
    assert a.axis == "runs"
    assert not a.degenerate


def test_bootstrap_errors():
    with expect_raises(EmptyInput):
        bootstrap_ci([])
    with expect_raises(SpecValidationError):
        bootstrap_ci([1.0, 2.0], resamples=0)
    with expect_raises(SpecValidationError):
        bootstrap_ci([1.0, 2.0], level=1.5)


if __name__ == "__main__":
    main_for(globals(), "STATS TESTS")
