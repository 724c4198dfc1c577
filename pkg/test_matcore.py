"""
Tests for dense matrix primitives: thin SVD, random transforms,
standardization and norms.
"""

import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import config
from core.errors import DegenerateColumn, DimensionMismatch, InvalidMatrix
from core.matcore import (
    frobenius_norm, normalize_columns, orthonormality_error, random_orthogonal,
    random_orthonormal_columns, random_permutation, standardize_columns, thin_svd
)
from testing_support import expect_raises, main_for, rng


def test_thin_svd_identity():
    svd = thin_svd(np.eye(3))
    assert np.allclose(svd.sigma, [1, 1, 1], atol=1e-12)
    assert orthonormality_error(svd.u @ svd.vt) < config.FACTOR_TOL


def test_thin_svd_diagonal_values():
    svd = thin_svd(np.diag([3.0, 2.0, 1.0]))
    assert np.allclose(svd.sigma, [3, 2, 1], atol=1e-12)


def test_thin_svd_reconstructs_random_matrix():
    a = rng(1).standard_normal((5, 7))
    svd = thin_svd(a)
    assert svd.rank == 5
    error = np.linalg.norm(svd.reconstruct() - a)
    assert error < config.RECONSTRUCTION_TOL * np.linalg.norm(a)
    assert orthonormality_error(svd.u) < config.FACTOR_TOL
    assert orthonormality_error(svd.vt.T) < config.FACTOR_TOL
    assert np.all(np.diff(svd.sigma) <= 0)


def test_thin_svd_factors_orthonormal_large():
    a = rng(2).standard_normal((512, 300))
    svd = thin_svd(a)
    assert orthonormality_error(svd.u) < config.FACTOR_TOL
    assert orthonormality_error(svd.vt.T) < config.FACTOR_TOL


def test_thin_svd_sign_convention():
    svd = thin_svd(rng(3).standard_normal((6, 4)))
    for j in range(svd.rank):
        column = svd.u[:, j]
        assert column[np.argmax(np.abs(column))] > 0


def test_thin_svd_rank_truncation():
    a = rng(4).standard_normal((6, 8))
    svd = thin_svd(a, rank=2)
    assert svd.u.shape == (6, 2)
    assert svd.vt.shape == (2, 8)
    assert np.allclose(svd.sigma, thin_svd(a).sigma[:2])


def test_thin_svd_rejects_bad_input():
    with expect_raises(InvalidMatrix):
        thin_svd(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with expect_raises(DimensionMismatch):
        thin_svd(np.eye(3), rank=4)


def test_random_orthogonal_one_by_one():
    q = random_orthogonal(1, seed=5)
    assert q.shape == (1, 1)
    assert abs(abs(q[0, 0]) - 1.0) < 1e-15


def test_random_orthogonal_is_orthonormal():
    for seed in range(5):
        q = random_orthogonal(50, seed=seed)
        assert np.max(np.abs(q.T @ q - np.eye(50))) < config.ORTHOGONALITY_TOL


def test_random_orthogonal_deterministic():
    assert np.array_equal(random_orthogonal(10, seed=42), random_orthogonal(10, seed=42))
    assert not np.array_equal(random_orthogonal(10, seed=42), random_orthogonal(10, seed=43))


def test_random_orthogonal_preserve_mean_fixes_ones():
    q = random_orthogonal(40, seed=6, preserve_mean=True)
    ones = np.ones(40)
    assert np.max(np.abs(q.T @ q - np.eye(40))) < config.ORTHOGONALITY_TOL
    assert np.max(np.abs(q @ ones - ones)) < 1e-12


def test_random_permutation_structure():
    assert np.array_equal(random_permutation(1, seed=0), np.eye(1))
    p = random_permutation(9, seed=7)
    assert np.array_equal(p.sum(axis=0), np.ones(9))
    assert np.array_equal(p.sum(axis=1), np.ones(9))
    assert set(np.unique(p)) <= {0.0, 1.0}
    assert np.array_equal(p.T @ p, np.eye(9))


def _pcg64_at(state: int, inc: int) -> np.random.Generator:
    bit_generator = np.random.PCG64()
    bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": state, "inc": inc},
        "has_uint32": 0,
        "uinteger": 0,
    }
    return np.random.Generator(bit_generator)


def test_random_permutation_golden():
    # first PCG64 output is 1: Fisher-Yates draws j=1 (low word) then j=0 (high word)
    assert np.array_equal(random_permutation(3, seed=_pcg64_at(0, 1)), np.array([
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
    ]))
    # first output 2: j=2 (no swap) then j=0
    assert np.array_equal(random_permutation(3, seed=_pcg64_at(0, 2)), np.array([
        [0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
    ]))
    assert np.array_equal(random_permutation(3, seed=11), random_permutation(3, seed=11))


def test_random_orthonormal_columns():
    w = random_orthonormal_columns(12, 4, seed=8)
    assert w.shape == (12, 4)
    assert orthonormality_error(w) < config.ORTHOGONALITY_TOL
    with expect_raises(DimensionMismatch):
        random_orthonormal_columns(3, 4)


def test_standardize_hand_example():
    z = standardize_columns(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert np.allclose(z[:, 0], [1 / math.sqrt(2), -1 / math.sqrt(2)], atol=1e-15)


def test_standardize_properties():
    a = rng(9).standard_normal((30, 20)) * 5 + 3
    z = standardize_columns(a)
    assert np.max(np.abs(z.mean(axis=0))) < 1e-12
    assert np.max(np.abs(np.diag(z.T @ z) - 1)) < config.FACTOR_TOL
    assert np.max(np.abs(standardize_columns(z) - z)) < 1e-12


def test_standardize_constant_column_reports_index():
    a = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    with expect_raises(DegenerateColumn, "column 1") as caught:
        standardize_columns(a)
    assert caught["error"].column == 1


def test_normalize_columns_unit_norm():
    a = rng(10).standard_normal((4, 6))
    z = normalize_columns(a)
    assert np.allclose(np.linalg.norm(z, axis=0), 1.0)
    with expect_raises(DegenerateColumn):
        normalize_columns(np.zeros((3, 2)))


def test_frobenius_norm():
    assert frobenius_norm(np.zeros((2, 3))) == 0.0
    assert abs(frobenius_norm(np.eye(3)) - math.sqrt(3)) < 1e-15
    assert frobenius_norm(np.array([[3.0, 4.0]])) == 5.0


if __name__ == "__main__":
    main_for(globals(), "MATCORE TESTS")
