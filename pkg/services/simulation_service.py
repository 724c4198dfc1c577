"""
Synthetic-recovery simulation.

Each run draws a source H, mixes it into N networks with random orthogonal
(or permutation) transforms, splits the examples into an SRM-alignment set
and a test set, fits SRM on the first and measures on the second how well
the shared space reproduces the within-network RSM.
"""

import dataclasses
import logging
import time
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

import config
from core.errors import SrmKitError, RunFailedError, SpecValidationError
from core.matcore import random_orthogonal, random_permutation, standardize_columns, as_matrix
from core.metrics import MetricsCollector
from core.models import (
    ActivityMatrix, Rsm, RunRecord, SimulationResult, SimulationSpec, SyntheticRun, RUN_METRICS
)
from core.run_context import RunContext
from repositories.matrix_repository import MatrixRepository
from services.rsm_service import average_inter_rsm, mean_within_rsm, rsm_correlation
from services.srm_service import fit_srm, transform, variance_explained
from services.stats_service import bootstrap_ci
from validators import SpecValidator, split_sizes

logger = logging.getLogger(__name__)

SIM_LAYER = "sim"

# Spawn-key namespace for the bootstrap streams, disjoint from run keys (run_index,)
BOOTSTRAP_STREAM = 0xB007


def derive_run_seed(seed: int, run_index: int) -> int:
    """
    Stable 32-bit seed for run `run_index`: first word of
    SeedSequence(seed, spawn_key=(run_index,)).
    """
    sequence = np.random.SeedSequence(seed, spawn_key=(run_index,))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def _bootstrap_seed(seed: int, metric_index: int) -> int:
    sequence = np.random.SeedSequence(seed, spawn_key=(BOOTSTRAP_STREAM, metric_index))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def _draw_transform(family: str, n: int, rng: np.random.Generator) -> np.ndarray:
    if family == "orthogonal":
        return random_orthogonal(n, rng, preserve_mean=True)
    if family == "permutation":
        return random_permutation(n, rng)
    if family == "haar":
        return random_orthogonal(n, rng)
    raise SpecValidationError(f"unknown transform family '{family}'")


def generate_run(spec: SimulationSpec, run_index: int, source: Optional[np.ndarray] = None) -> SyntheticRun:
    """
    Generate one run.

    H is standardized column-wise before mixing so that every noiseless
    X_i = Q_i H is standardized too; X_i = Q_i H + noise_sigma * G_i.

    Args:
        spec: Validated simulation spec
        run_index: Run number, selects the derived seed
        source: Supplied H (n x m) for source='supplied-matrix'

    Returns:
        SyntheticRun with alignment/test ActivityMatrix lists and ground truth
    """
    SpecValidator.validate(spec)
    run_seed = derive_run_seed(spec.seed, run_index)
    rng = np.random.default_rng(run_seed)

    if spec.source == "supplied-matrix":
        if source is None:
            raise SpecValidationError("source 'supplied-matrix' needs the loaded source matrix")
        raw = as_matrix(source, "supplied source")
    else:
        raw = rng.standard_normal((spec.units, spec.examples))
    h = standardize_columns(raw)
    n, m = h.shape

    sizes = split_sizes(m, spec.split_fraction)
    if sizes is None:
        raise SpecValidationError(f"cannot split {m} examples into two sets of >= 2")

    transforms = [_draw_transform(spec.transform_family, n, rng) for _ in range(spec.networks)]
    data = []
    for q in transforms:
        # Noise is always drawn so every noise level shares H, Q_i and the split
        noise = rng.standard_normal((n, m))
        x = q @ h
        if spec.noise_sigma > 0:
            x = x + spec.noise_sigma * noise
        data.append(x)

    order = rng.permutation(m)
    alignment_columns, test_columns = order[:sizes[0]], order[sizes[0]:]

    networks = [ActivityMatrix(f"net{i}", SIM_LAYER, x) for i, x in enumerate(data)]
    return SyntheticRun(
        run_index=run_index,
        seed=run_seed,
        source=h,
        transforms=transforms,
        alignment=[a.with_columns(alignment_columns) for a in networks],
        test=[a.with_columns(test_columns) for a in networks],
        alignment_columns=alignment_columns,
        test_columns=test_columns,
    )


def _evaluate(
    alignment: Sequence[ActivityMatrix],
    test: Sequence[ActivityMatrix],
    k: Optional[int],
    max_iters: int,
    tol: float,
    metrics: Optional[MetricsCollector],
) -> Tuple[Dict[str, float], Dict[str, Rsm], object]:
    model = fit_srm(alignment, k=k, max_iters=max_iters, tol=tol, metrics=metrics)
    shared = transform(model, test)

    wrsm = mean_within_rsm(test)
    shared_irsm = average_inter_rsm(shared, space="shared")
    native_irsm = average_inter_rsm(test, space="native")

    values = {
        "shared_pearson": rsm_correlation(shared_irsm, wrsm, "pearson"),
        "shared_spearman": rsm_correlation(shared_irsm, wrsm, "spearman"),
        "native_pearson": rsm_correlation(native_irsm, wrsm, "pearson"),
        "native_spearman": rsm_correlation(native_irsm, wrsm, "spearman"),
        "variance_explained": variance_explained(model, test),
    }
    rsms = {"wrsm": wrsm, "shared_irsm": shared_irsm, "native_irsm": native_irsm}
    return values, rsms, model


def evaluate_run(
    alignment: Sequence[ActivityMatrix],
    test: Sequence[ActivityMatrix],
    k: Optional[int] = None,
    run_index: int = 0,
    seed: int = 0,
    max_iters: int = config.MAX_ITERS,
    tol: float = config.TOL,
    metrics: Optional[MetricsCollector] = None,
) -> RunRecord:
    """
    Fit SRM on `alignment`, transform `test` and compare, on the test set,
    the averaged iRSM in shared and native space with the averaged native wRSM.
    """
    values, _, model = _evaluate(alignment, test, k, max_iters, tol, metrics)
    return RunRecord(
        run_index=run_index,
        seed=seed,
        iterations=model.iterations,
        converged=model.converged,
        final_objective=model.final_objective,
        **values,
    )


class SimulationService:
    """
    Runs simulations and noise sweeps.

    Runs are independent; with threads > 1 they execute on joblib's threading
    backend and are re-ordered by run index before aggregation.
    """

    def __init__(self, matrix_repo: Optional[MatrixRepository] = None, metrics: Optional[MetricsCollector] = None):
        """
        Initialize simulation service.

        Args:
            matrix_repo: Loads supplied source matrices
            metrics: Metrics collector (optional)
        """
        self.matrix_repo = matrix_repo or MatrixRepository(metrics)
        self.metrics = metrics

    def resolve_spec(self, spec: SimulationSpec) -> Tuple[SimulationSpec, Optional[np.ndarray]]:
        """
        Validate `spec`; for a supplied source, load it and take units/examples
        from its shape. An automatic k resolves to min(units, alignment examples),
        the value fit_srm will use.
        """
        source = None
        if spec.source == "supplied-matrix" and spec.source_path:
            source = self.matrix_repo.read_matrix(spec.source_path)
            spec = dataclasses.replace(spec, units=int(source.shape[0]), examples=int(source.shape[1]))
        spec = SpecValidator.validate(spec)
        if spec.k is None:
            alignment, _ = split_sizes(spec.examples, spec.split_fraction)
            spec = dataclasses.replace(spec, k=min(spec.units, alignment))
        return spec, source

    def _run_one(
        self,
        spec: SimulationSpec,
        run_index: int,
        source: Optional[np.ndarray],
        keep_rsms: bool,
        command: Optional[str] = None,
    ) -> Tuple[RunRecord, Optional[Dict[str, Rsm]]]:
        run_seed = derive_run_seed(spec.seed, run_index)
        # worker threads do not inherit the caller's RunContext
        with RunContext(command=command, run_index=run_index, seed=run_seed):
            started = time.perf_counter()
            try:
                run = generate_run(spec, run_index, source)
                values, rsms, model = _evaluate(
                    run.alignment, run.test, spec.k, spec.max_iters, spec.tol, self.metrics
                )
            except SrmKitError as e:
                logger.error(f"Run {run_index} failed: {e}")
                raise RunFailedError(run_index, e) from e
            except Exception as e:
                logger.error(f"Run {run_index} failed unexpectedly: {e}", exc_info=True)
                raise RunFailedError(run_index, e) from e

            record = RunRecord(
                run_index=run_index,
                seed=run_seed,
                iterations=model.iterations,
                converged=model.converged,
                final_objective=model.final_objective,
                **values,
            )
            elapsed = time.perf_counter() - started
            if self.metrics is not None:
                self.metrics.inc_counter("simulation_runs_total")
                self.metrics.observe_histogram("simulation_run_duration_seconds", elapsed)

            logger.debug(
                f"shared r={record.shared_pearson:.6f} native r={record.native_pearson:.6f} "
                f"VE={record.variance_explained:.6f} ({elapsed:.2f}s)"
            )
            return record, (rsms if keep_rsms else None)

    def run_simulation(
        self,
        spec: SimulationSpec,
        threads: int = config.THREADS,
        emit_rsms: bool = False,
    ) -> SimulationResult:
        """
        Execute spec.runs runs and aggregate them.

        Args:
            spec: Simulation spec
            threads: Parallel runs (1 = sequential)
            emit_rsms: Keep the first run's averaged wRSM and shared/native iRSMs

        Returns:
            SimulationResult with per-run records in run order and bootstrap
            CIs over runs for every metric

        Raises:
            RunFailedError: a run failed; carries its index
        """
        spec, source = self.resolve_spec(spec)
        logger.info(
            f"Simulating {spec.runs} run(s): n={spec.units} m={spec.examples} N={spec.networks} "
            f"family={spec.transform_family} noise={spec.noise_sigma} seed={spec.seed}"
        )

        parent = RunContext.get_current()
        command = parent.command if parent else None
        outputs = Parallel(n_jobs=max(1, threads), backend="threading")(
            delayed(self._run_one)(spec, i, source, emit_rsms and i == 0, command) for i in range(spec.runs)
        )
        outputs = sorted(outputs, key=lambda item: item[0].run_index)
        records = [record for record, _ in outputs]

        aggregates = {}
        for index, name in enumerate(RUN_METRICS):
            aggregates[name] = bootstrap_ci(
                [getattr(r, name) for r in records],
                level=spec.level,
                resamples=spec.resamples,
                seed=_bootstrap_seed(spec.seed, index),
                axis="runs",
            )

        beats = all(r.shared_pearson > r.native_pearson for r in records)
        result = SimulationResult(
            spec=spec,
            records=records,
            aggregates=aggregates,
            shared_beats_native_all=beats,
            example_rsms=outputs[0][1] if emit_rsms else None,
        )

        logger.info(
            f"Simulation done: shared r={aggregates['shared_pearson'].mean:.6f} "
            f"native r={aggregates['native_pearson'].mean:.6f} "
            f"VE={aggregates['variance_explained'].mean:.6f} shared>native in all runs={beats}"
        )
        return result

    def run_noise_sweep(
        self,
        spec: SimulationSpec,
        sigmas: Sequence[float],
        threads: int = config.THREADS,
    ) -> List[SimulationResult]:
        """One simulation per noise level, same seed for every level."""
        if not sigmas:
            raise SpecValidationError("noise sweep needs at least one sigma")
        results = []
        for sigma in sigmas:
            with RunContext(noise_sigma=sigma):
                results.append(self.run_simulation(dataclasses.replace(spec, noise_sigma=float(sigma)), threads))
        return results
