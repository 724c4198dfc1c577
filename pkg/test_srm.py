"""
Tests for the SRM solver, projection, variance explained and the exact
two-network construction from compact SVDs.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import config
from core.errors import (
    DegenerateSpectrum, DimensionMismatch, KTooLarge, NetworkCountMismatch, RsmMismatch,
    SpecValidationError
)
from core.matcore import (
    orthonormality_error, random_orthogonal, random_orthonormal_columns, standardize_columns
)
from core.metrics import MetricsCollector
from core.models import ActivityMatrix, SrmModel
from services.rsm_service import shared_rsm, within_rsm
from services.srm_service import (
    build_srm_from_rsm_equal, fit_srm, procrustes, shared_gram_deviation, srm_objective,
    transform, variance_explained
)
from testing_support import expect_raises, main_for, mixed_networks, rng


def _energy(mats):
    return sum(float(np.sum(standardize_columns(a.data) ** 2)) for a in mats)


def _split(mats, columns):
    return [a.with_columns(columns) for a in mats]


def test_identical_inputs_fit_exactly():
    x = rng(1).standard_normal((6, 20))
    mats = [ActivityMatrix("a", "l", x), ActivityMatrix("b", "l", x.copy())]
    model = fit_srm(mats, k=6)
    assert model.final_objective < 1e-10 * _energy(mats)
    assert np.max(np.abs(model.transforms[0] - model.transforms[1])) < 1e-12
    assert model.converged


def test_orthogonal_mixtures_fit_exactly():
    mats = mixed_networks(16, 80, 5, seed=2)
    model = fit_srm(mats)
    assert model.k == 16
    assert model.final_objective < 1e-8 * _energy(mats)
    assert model.converged
    assert all(orthonormality_error(w) < config.CONSTRAINT_TOL for w in model.transforms)


def test_haar_mixtures_fit_exactly_without_standardization():
    h = rng(3).standard_normal((10, 40))
    mats = [ActivityMatrix(f"net{i}", "l", random_orthogonal(10, seed=i) @ h) for i in range(4)]
    model = fit_srm(mats, standardize=False)
    energy = sum(float(np.sum(a.data ** 2)) for a in mats)
    assert model.final_objective < 1e-8 * energy
    assert not model.standardized


def test_rank_one_shared_data():
    generator = rng(4)
    s = generator.standard_normal(30)
    mats = []
    for i in range(3):
        w = generator.standard_normal(8)
        mats.append(ActivityMatrix(f"net{i}", "l", np.outer(w / np.linalg.norm(w), s)))
    model = fit_srm(mats, k=1)
    assert model.final_objective < 1e-8 * _energy(mats)
    assert variance_explained(model, mats) > 1 - 1e-8


def test_trace_monotone_and_constraint_every_iteration():
    mats = mixed_networks(10, 40, 5, seed=5, noise=0.3)
    for init in ("svd", "random"):
        model = fit_srm(mats, k=4, max_iters=60, tol=0.0, seed=7, init=init)
        trace = model.fit_trace
        assert len(trace) == 60
        assert all(b <= a + config.MONOTONE_SLACK for a, b in zip(trace, trace[1:]))
        assert len(model.orthonormality_trace) == len(trace)
        assert max(model.orthonormality_trace) < config.CONSTRAINT_TOL


def test_procrustes_beats_random_alternatives():
    mats = mixed_networks(12, 50, 4, seed=6, noise=0.5)
    model = fit_srm(mats, k=5, max_iters=30)
    z = standardize_columns(mats[0].data)
    generator = rng(7)
    for _ in range(100):
        w, _ = procrustes(z, model.shared)
        best = np.linalg.norm(z - w @ model.shared)
        other = random_orthonormal_columns(12, 5, generator)
        assert best <= np.linalg.norm(z - other @ model.shared) + 1e-12


def test_centring_rank_loss_is_not_a_warning():
    mats = mixed_networks(8, 40, 3, seed=30, noise=0.3)
    model = fit_srm(mats, max_iters=20)
    assert model.k == 8
    assert model.warnings == []
    _, missing = procrustes(standardize_columns(mats[0].data), model.shared)
    assert missing == 1


def test_rank_deficient_networks_are_warned():
    generator = rng(31)
    low_rank = generator.standard_normal((8, 3)) @ generator.standard_normal((3, 40))
    mats = [ActivityMatrix(f"net{i}", "l", random_orthogonal(8, generator) @ low_rank) for i in range(3)]
    model = fit_srm(mats, k=8, standardize=False, max_iters=5)
    assert len(model.warnings) == 1
    assert "rank-deficient" in model.warnings[0]


def test_threaded_procrustes_steps_match_sequential():
    mats = mixed_networks(10, 40, 5, seed=32, noise=0.3)
    sequential = fit_srm(mats, k=4, max_iters=15, tol=0.0)
    threaded = fit_srm(mats, k=4, max_iters=15, tol=0.0, threads=3)
    assert np.array_equal(threaded.shared, sequential.shared)
    assert all(np.array_equal(a, b) for a, b in zip(threaded.transforms, sequential.transforms))
    assert threaded.fit_trace == sequential.fit_trace
    with expect_raises(SpecValidationError, "threads"):
        fit_srm(mats, threads=0)


def test_non_convergence_is_reported_not_raised():
    mats = mixed_networks(10, 40, 4, seed=8, noise=0.5)
    model = fit_srm(mats, k=3, max_iters=1, tol=0.0)
    assert not model.converged
    assert model.iterations == 1


def test_fit_records_metrics():
    metrics = MetricsCollector()
    fit_srm(mixed_networks(6, 20, 3, seed=9), metrics=metrics)
    assert metrics.counter_value("srm_fits_total") == 1
    assert metrics.counter_value("srm_iterations_total") >= 1


def test_fit_validation_errors():
    mats = mixed_networks(6, 20, 3, seed=10)
    with expect_raises(DimensionMismatch):
        fit_srm(mats[:1])
    with expect_raises(DimensionMismatch):
        fit_srm([mats[0], ActivityMatrix("x", "l", rng(0).standard_normal((6, 21)))])
    with expect_raises(KTooLarge, "min n_i = 6"):
        fit_srm(mats, k=7)
    with expect_raises(KTooLarge):
        fit_srm(mats, k=0)


def test_transform_identity_model():
    x = rng(11).standard_normal((4, 6))
    model = SrmModel(
        k=4, transforms=[np.eye(4), np.eye(4)], shared=x, fit_trace=[0.0], converged=True,
        network_ids=["a", "b"], standardized=False,
    )
    outputs = transform(model, [x, x])
    assert np.array_equal(outputs[0], x)


def test_transform_training_data_returns_shared():
    mats = mixed_networks(8, 30, 4, seed=12)
    model = fit_srm(mats)
    for y in transform(model, mats):
        assert np.max(np.abs(y - model.shared)) < 1e-8


def test_transform_aligns_held_out_split():
    mats = mixed_networks(12, 60, 5, seed=13)
    order = rng(14).permutation(60)
    model = fit_srm(_split(mats, order[:30]))
    outputs = transform(model, _split(mats, order[30:]))
    for y in outputs[1:]:
        assert np.max(np.abs(y - outputs[0])) < 1e-6


def test_transform_errors():
    mats = mixed_networks(6, 20, 3, seed=15)
    model = fit_srm(mats)
    with expect_raises(NetworkCountMismatch):
        transform(model, mats[:2])
    with expect_raises(NetworkCountMismatch):
        transform(model, list(reversed(mats)))
    wrong = [mats[0], mats[1], ActivityMatrix("net2", "layer1", rng(0).standard_normal((7, 20)))]
    with expect_raises(DimensionMismatch):
        transform(model, wrong)


def test_variance_explained_noiseless_held_out():
    mats = mixed_networks(16, 128, 6, seed=16)
    order = rng(17).permutation(128)
    model = fit_srm(_split(mats, order[:64]))
    assert variance_explained(model, _split(mats, order[64:])) >= 0.999


def test_variance_explained_independent_networks_is_small():
    generator = rng(18)
    train = [ActivityMatrix(f"net{i}", "l", generator.standard_normal((50, 200))) for i in range(10)]
    test = [ActivityMatrix(f"net{i}", "l", generator.standard_normal((50, 200))) for i in range(10)]
    model = fit_srm(train, k=5)
    assert variance_explained(model, test) < 0.3


def test_srm_objective_oracles():
    mats = mixed_networks(8, 25, 3, seed=19, noise=0.2)
    model = fit_srm(mats, k=3)
    expected = sum(
        np.linalg.norm(standardize_columns(a.data) - w @ model.shared, 'fro') ** 2
        for a, w in zip(mats, model.transforms)
    )
    assert abs(srm_objective(model, mats) - expected) < 1e-9 * expected

    zero = SrmModel(
        k=3, transforms=model.transforms, shared=np.zeros_like(model.shared), fit_trace=[],
        converged=False, network_ids=model.network_ids,
    )
    assert abs(srm_objective(zero, mats) - _energy(mats)) < 1e-9 * _energy(mats)

    exact = fit_srm(mixed_networks(8, 25, 3, seed=20))
    assert srm_objective(exact, mixed_networks(8, 25, 3, seed=20)) < 1e-10 * 25 * 3


def test_perfect_fit_reproduces_gram_and_rsm():
    mats = mixed_networks(10, 40, 4, seed=21)
    model = fit_srm(mats)
    assert shared_gram_deviation(model, mats) < 1e-8
    s_rsm = shared_rsm(model.shared).values
    for a in mats:
        assert np.max(np.abs(s_rsm - within_rsm(a).values)) < 1e-8


def test_build_from_equal_rsms_identical_inputs():
    a = ActivityMatrix("a", "l", rng(22).standard_normal((8, 30)))
    w_a, w_b, s = build_srm_from_rsm_equal(a, a)
    z = standardize_columns(a.data)
    assert np.max(np.abs(w_a - w_b)) < 1e-12
    assert np.linalg.norm(z - w_a @ s) < 1e-6 * np.linalg.norm(z)


def test_build_from_equal_rsms_random_pairs():
    generator = rng(23)
    for trial in range(100):
        a = generator.standard_normal((32, 200))
        q = random_orthogonal(32, generator, preserve_mean=True)
        w_a, w_b, s = build_srm_from_rsm_equal(
            ActivityMatrix("a", "l", a), ActivityMatrix("b", "l", q @ a)
        )
        za, zb = standardize_columns(a), standardize_columns(q @ a)
        assert np.linalg.norm(za - w_a @ s) < 1e-6 * np.linalg.norm(za), f"trial {trial}"
        assert np.linalg.norm(zb - w_b @ s) < 1e-6 * np.linalg.norm(zb), f"trial {trial}"
        assert orthonormality_error(w_a) < 1e-8
        assert orthonormality_error(w_b) < 1e-8


def test_build_from_equal_rsms_rejects_degenerate_and_mismatched():
    with expect_raises(DegenerateSpectrum):
        build_srm_from_rsm_equal(np.eye(2), np.eye(2), standardize=False)
    with expect_raises(DegenerateSpectrum, "singular values of a"):
        build_srm_from_rsm_equal(np.eye(2), np.eye(2))
    with expect_raises(DegenerateSpectrum):
        build_srm_from_rsm_equal(np.eye(3), np.eye(3))
    generator = rng(24)
    with expect_raises(RsmMismatch):
        build_srm_from_rsm_equal(generator.standard_normal((6, 12)), generator.standard_normal((6, 12)))


if __name__ == "__main__":
    main_for(globals(), "SRM TESTS")
