"""
Command handlers behind the srmkit CLI.

Each handler runs inside a RunContext, writes its artifacts through the
repositories and returns the one-line summary the CLI prints.
"""

import csv
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import config
from core.errors import ManifestParseError, NetworkCountMismatch
from core.metrics import MetricsCollector
from core.models import ActivityMatrix, SimulationResult, SimulationSpec
from core.run_context import RunContext
from repositories import (
    ActivationRepository, MatrixRepository, ModelRepository, ReportRepository, SpecRepository
)
from repositories.activation_repository import group_by_layer
from repositories.report_repository import build_report, conventions_block
from services.evaluation_service import EvaluationService
from services.rsm_service import average_inter_rsm, within_rsm, average_rsm
from services.simulation_service import SimulationService
from services.srm_service import fit_srm, transform

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
RUNS_TABLE = "runs.csv"
SPEC_ECHO_FILE = "spec.txt"

RUN_TABLE_FIELDS = [
    "noise_sigma", "run_index", "seed", "shared_pearson", "shared_spearman",
    "native_pearson", "native_spearman", "variance_explained",
    "iterations", "converged", "final_objective",
]


def _manifest_location(manifest: str):
    path = Path(manifest)
    return path.parent, path.name


def _simulation_metrics(result: SimulationResult) -> Dict:
    aggregates = result.aggregates
    return {
        "aggregates": {name: ci.to_dict() for name, ci in aggregates.items()},
        "shared_beats_native_all": result.shared_beats_native_all,
        "pearson_spearman_gap": abs(aggregates["shared_pearson"].mean - aggregates["shared_spearman"].mean),
        "degenerate_ci": any(ci.degenerate for ci in aggregates.values()),
        "runs": [r.to_dict() for r in result.records],
    }


class CommandHandlers:
    """Handlers for simulate, fit, transform, evaluate and rsm."""

    def __init__(self, metrics: Optional[MetricsCollector] = None):
        """Initialize handlers with repositories and services."""
        self.metrics = metrics
        self.matrix_repo = MatrixRepository(metrics)
        self.report_repo = ReportRepository(metrics)
        self.model_repo = ModelRepository(self.matrix_repo, self.report_repo, metrics)
        self.activation_repo = ActivationRepository(self.matrix_repo, metrics)
        self.spec_repo = SpecRepository(metrics)
        self.simulation_service = SimulationService(self.matrix_repo, metrics)

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------
    def _ingest(self, manifest: str, layer: Optional[str]) -> List[ActivityMatrix]:
        directory, name = _manifest_location(manifest)
        mats = self.activation_repo.ingest_activations(directory, name, layer)
        layers = sorted({m.layer_id for m in mats})
        if len(layers) > 1:
            raise ManifestParseError(
                f"manifest holds layers {', '.join(layers)}; choose one with --layer"
            )
        return mats

    @staticmethod
    def _in_model_order(model, mats: Sequence[ActivityMatrix]) -> List[ActivityMatrix]:
        by_id = {a.network_id: a for a in mats}
        missing = [n for n in model.network_ids if n not in by_id]
        if missing or len(mats) != model.networks:
            raise NetworkCountMismatch(
                f"model networks {model.network_ids} vs manifest networks {[a.network_id for a in mats]}"
            )
        return [by_id[n] for n in model.network_ids]

    def _write_runs_table(self, path: Path, rows: List[tuple]):
        with self.report_repo.atomic_write(path, "w") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RUN_TABLE_FIELDS)
            for sigma, record in rows:
                data = record.to_dict()
                writer.writerow([repr(float(sigma))] + [
                    repr(data[f]) if isinstance(data[f], float) else data[f]
                    for f in RUN_TABLE_FIELDS[1:]
                ])

    # ------------------------------------------------------------------
    # simulate
    # ------------------------------------------------------------------
    def handle_simulate(
        self,
        spec: SimulationSpec,
        out: str,
        threads: int = config.THREADS,
        noise_sweep: Optional[Sequence[float]] = None,
        emit_rsms: bool = False,
        fmt: Optional[str] = None,
    ) -> str:
        with RunContext(command="simulate", seed=spec.seed):
            out_dir = Path(out)
            out_dir.mkdir(parents=True, exist_ok=True)

            if noise_sweep:
                results = self.simulation_service.run_noise_sweep(spec, noise_sweep, threads)
            else:
                results = [self.simulation_service.run_simulation(spec, threads, emit_rsms)]

            resolved = results[0].spec
            spec_echo = dict(resolved.to_dict(), threads=threads, emit_rsms=emit_rsms)
            if noise_sweep:
                spec_echo["noise_sweep"] = [float(s) for s in noise_sweep]
                metrics = {
                    "sweep": [
                        dict(noise_sigma=r.spec.noise_sigma, **_simulation_metrics(r)) for r in results
                    ]
                }
            else:
                metrics = _simulation_metrics(results[0])

            conventions = conventions_block(
                bootstrap_axis="runs",
                ci_method="percentile",
                k_per_layer={"sim": resolved.shared_dim},
                run_seed_rule="SeedSequence(seed, spawn_key=(run_index,)) first uint32",
                source_rule="H column-standardized before mixing",
                simulation_defaults="n=64, m=1024, N=10 (desk-scale)",
            )
            report = build_report("simulate", spec_echo, metrics, conventions, resolved.seed)
            self.report_repo.write_report(report, out_dir / REPORT_FILE)
            self.spec_repo.write_spec(resolved, out_dir / SPEC_ECHO_FILE)
            self._write_runs_table(
                out_dir / RUNS_TABLE,
                [(r.spec.noise_sigma, record) for r in results for record in r.records],
            )

            if emit_rsms and not noise_sweep and results[0].example_rsms:
                for name, rsm in results[0].example_rsms.items():
                    self.matrix_repo.write_matrix(
                        rsm.values, out_dir / MatrixRepository.file_name(name, fmt), fmt
                    )

            parts = []
            for r in results:
                agg = r.aggregates
                parts.append(
                    f"noise={r.spec.noise_sigma:g} shared_r={agg['shared_pearson'].mean:.6f} "
                    f"native_r={agg['native_pearson'].mean:.6f} VE={agg['variance_explained'].mean:.6f}"
                )
            return f"simulate: runs={resolved.runs} " + " | ".join(parts) + f" -> {out_dir / REPORT_FILE}"

    # ------------------------------------------------------------------
    # fit
    # ------------------------------------------------------------------
    def handle_fit(
        self,
        manifest: str,
        out: str,
        layer: Optional[str] = None,
        k: Optional[int] = None,
        max_iters: int = config.MAX_ITERS,
        tol: float = config.TOL,
        seed: Optional[int] = None,
        init: str = "svd",
        fmt: Optional[str] = None,
        threads: int = config.THREADS,
    ) -> str:
        with RunContext(command="fit", seed=seed):
            mats = self._ingest(manifest, layer)
            model = fit_srm(
                mats, k=k, max_iters=max_iters, tol=tol, seed=seed, init=init,
                metrics=self.metrics, threads=threads,
            )
            self.model_repo.save_model(model, out, fmt)
            return (
                f"fit: layer={model.layer_id} N={model.networks} k={model.k} "
                f"iterations={model.iterations} final_objective={model.final_objective:.6e} "
                f"converged={str(model.converged).lower()}"
            )

    # ------------------------------------------------------------------
    # transform
    # ------------------------------------------------------------------
    def handle_transform(self, model_dir: str, manifest: str, out: str, fmt: Optional[str] = None) -> str:
        with RunContext(command="transform"):
            model = self.model_repo.load_model(model_dir)
            mats = self._in_model_order(model, self._ingest(manifest, model.layer_id or None))
            shared = transform(model, mats)

            out_dir = Path(out)
            for a, y in zip(mats, shared):
                self.matrix_repo.write_matrix(y, out_dir / MatrixRepository.file_name(f"shared_{a.network_id}", fmt), fmt)
            return f"transform: wrote {len(shared)} shared-space matrices (k={model.k}) to {out_dir}"

    # ------------------------------------------------------------------
    # evaluate
    # ------------------------------------------------------------------
    def handle_evaluate(
        self,
        model_dir: Optional[str],
        manifest: str,
        report_path: str,
        resamples: int = config.BOOTSTRAP_RESAMPLES,
        level: float = config.CI_LEVEL,
        seed: int = config.DEFAULT_SEED,
        reference_manifest: Optional[str] = None,
        all_layers: bool = False,
        split_fraction: float = config.SIM_SPLIT_FRACTION,
        k: Optional[int] = None,
        threads: int = config.THREADS,
    ) -> str:
        with RunContext(command="evaluate", seed=seed):
            service = EvaluationService(resamples, level, seed, self.metrics)
            spec_echo = {
                "model": str(model_dir) if model_dir else None,
                "manifest": str(manifest),
                "reference_manifest": str(reference_manifest) if reference_manifest else None,
                "all_layers": all_layers,
            }

            if all_layers:
                directory, name = _manifest_location(manifest)
                mats = self.activation_repo.ingest_activations(directory, name)
                reference = None
                if reference_manifest:
                    ref_dir, ref_name = _manifest_location(reference_manifest)
                    reference = self.activation_repo.ingest_activations(ref_dir, ref_name)
                results = service.fit_and_evaluate_layers(mats, split_fraction, k, reference, threads)
                spec_echo.update(split_fraction=split_fraction, k=k, threads=threads)
            else:
                model = self.model_repo.load_model(model_dir)
                mats = self._in_model_order(model, self._ingest(manifest, model.layer_id or None))
                reference = self._ingest(reference_manifest, model.layer_id or None) if reference_manifest else None
                results = [service.evaluate(model, mats, reference)]

            spec_echo.update(resamples=resamples, level=level, seed=seed)
            conventions = conventions_block(
                bootstrap_axis="network_pairs",
                ci_method="percentile",
                k_per_layer={r.layer_id: r.k for r in results},
                units_per_network=(
                    results[0].units if not all_layers else {r.layer_id: r.units for r in results}
                ),
                wrsm_source=results[0].wrsm_source,
            )
            if all_layers:
                metrics = {"layers": [r.to_metrics() for r in results]}
            else:
                spec_echo["layer_id"] = results[0].layer_id
                spec_echo["k"] = results[0].k
                metrics = results[0].to_metrics()
            report = build_report("evaluate", spec_echo, metrics, conventions, seed)
            self.report_repo.write_report(report, report_path)
            return " | ".join(
                f"evaluate: layer={r.layer_id} shared_r={r.shared_pearson:.6f} "
                f"native_r={r.native_pearson:.6f} VE={r.variance_explained:.6f} "
                f"wrsm_consistency={r.wrsm_consistency_mean:.6f}"
                for r in results
            )

    # ------------------------------------------------------------------
    # rsm
    # ------------------------------------------------------------------
    def handle_rsm(
        self,
        manifest: str,
        kind: str,
        out: str,
        layer: Optional[str] = None,
        fmt: Optional[str] = None,
    ) -> str:
        with RunContext(command="rsm"):
            directory, name = _manifest_location(manifest)
            mats = self.activation_repo.ingest_activations(directory, name, layer)
            out_dir = Path(out)
            written = 0

            for layer_id, group in group_by_layer(mats).items():
                if kind in ("within", "both"):
                    rsms = []
                    for a in group:
                        rsm = within_rsm(a)
                        rsms.append(rsm)
                        stem = f"within_{layer_id}_{a.network_id}"
                        self.matrix_repo.write_matrix(rsm.values, out_dir / MatrixRepository.file_name(stem, fmt), fmt)
                        written += 1
                    mean = average_rsm(rsms)
                    self.matrix_repo.write_matrix(
                        mean.values, out_dir / MatrixRepository.file_name(f"within_{layer_id}_mean", fmt), fmt
                    )
                    written += 1
                if kind in ("inter", "both"):
                    inter = average_inter_rsm(group, space="native")
                    self.matrix_repo.write_matrix(
                        inter.values, out_dir / MatrixRepository.file_name(f"inter_{layer_id}_mean", fmt), fmt
                    )
                    written += 1

            return f"rsm: wrote {written} {kind} RSM file(s) to {out_dir}"
