"""
Model repository: an SrmModel is a directory holding one matrix file per
transform W_i, one for S, and a model.json metadata document.
"""

from pathlib import Path
from typing import Optional

import config
from core.errors import DimMismatch, ManifestParseError
from core.metrics import MetricsCollector
from core.models import SrmModel
from repositories.base_repository import BaseRepository, PathLike
from repositories.matrix_repository import MatrixRepository
from repositories.report_repository import ReportRepository

METADATA_FILE = "model.json"


class ModelRepository(BaseRepository):
    """Saves and loads fitted SRM models."""

    def __init__(
        self,
        matrix_repo: Optional[MatrixRepository] = None,
        report_repo: Optional[ReportRepository] = None,
        metrics: Optional[MetricsCollector] = None,
    ):
        super().__init__(metrics)
        self.matrix_repo = matrix_repo or MatrixRepository(metrics)
        self.report_repo = report_repo or ReportRepository(metrics)

    def save_model(self, model: SrmModel, directory: PathLike, fmt: Optional[str] = None) -> Path:
        """
        Write `model` into `directory` (created if needed).

        Returns:
            Path of the metadata document
        """
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        fmt = (fmt or config.MATRIX_FORMAT).lower()

        transform_files = []
        for index, w in enumerate(model.transforms):
            name = MatrixRepository.file_name(f"W_{index:03d}", fmt)
            self.matrix_repo.write_matrix(w, out / name, fmt)
            transform_files.append(name)

        shared_file = MatrixRepository.file_name("S", fmt)
        self.matrix_repo.write_matrix(model.shared, out / shared_file, fmt)

        metadata = {
            "schema_version": config.REPORT_SCHEMA_VERSION,
            "toolkit_version": config.TOOLKIT_VERSION,
            "k": model.k,
            "network_ids": list(model.network_ids),
            "layer_id": model.layer_id,
            "units": model.units,
            "standardized": model.standardized,
            "standardization_policy": config.STANDARDIZATION_POLICY if model.standardized else "none",
            "init": model.init,
            "seed": model.seed,
            "tol": model.tol,
            "max_iters": model.max_iters,
            "iterations": model.iterations,
            "converged": model.converged,
            "final_objective": model.final_objective,
            "fit_trace": list(model.fit_trace),
            "orthonormality_trace": list(model.orthonormality_trace),
            "warnings": list(model.warnings),
            "format": fmt,
            "files": {
                "transforms": transform_files,
                "shared": shared_file,
            },
        }
        path = self.report_repo.write_report(metadata, out / METADATA_FILE)
        self.logger.info(f"Saved SRM model (N={model.networks}, k={model.k}) to {out}")
        return path

    def load_model(self, directory: PathLike) -> SrmModel:
        """
        Read a model directory written by save_model.

        Raises:
            MissingFile: metadata or a matrix file is absent
            DimMismatch: matrix shapes disagree with the metadata
        """
        out = Path(directory)
        meta = self.report_repo.read_report(out / METADATA_FILE)

        try:
            files = meta["files"]
            network_ids = [str(n) for n in meta["network_ids"]]
            k = int(meta["k"])
        except (KeyError, TypeError, ValueError) as e:
            raise ManifestParseError(f"{out / METADATA_FILE}: missing or invalid field {e}") from e

        if len(files["transforms"]) != len(network_ids):
            raise DimMismatch(
                f"{out}: {len(files['transforms'])} transform files for {len(network_ids)} networks"
            )

        transforms = [self.matrix_repo.read_matrix(out / name) for name in files["transforms"]]
        shared = self.matrix_repo.read_matrix(out / files["shared"])

        for network_id, name, w in zip(network_ids, files["transforms"], transforms):
            if w.shape[1] != k:
                raise DimMismatch(f"{out / name}: transform of '{network_id}' has {w.shape[1]} columns, k={k}")
        if shared.shape[0] != k:
            raise DimMismatch(f"{out / files['shared']}: shared response has {shared.shape[0]} rows, k={k}")

        trace = [float(v) for v in meta.get("fit_trace", []) if v is not None]
        return SrmModel(
            k=k,
            transforms=transforms,
            shared=shared,
            fit_trace=trace,
            converged=bool(meta.get("converged", False)),
            network_ids=network_ids,
            layer_id=str(meta.get("layer_id", "")),
            standardized=bool(meta.get("standardized", True)),
            iterations=int(meta.get("iterations", len(trace))),
            tol=float(meta.get("tol", config.TOL)),
            max_iters=int(meta.get("max_iters", config.MAX_ITERS)),
            init=str(meta.get("init", "svd")),
            seed=meta.get("seed"),
            orthonormality_trace=[float(v) for v in meta.get("orthonormality_trace", [])],
            warnings=list(meta.get("warnings", [])),
        )
