"""
Activation repository: ingests externally exported network activations
listed in a plain-text manifest.

Manifest grammar, one entry per line:
    network_id, layer_id, path
'#' starts a comment; paths are relative to the manifest's directory.
"""

import re
from dataclasses import dataclass
from itertools import groupby
from pathlib import Path
from typing import Dict, List, Optional

from core.errors import DuplicateEntry, ExampleCountMismatch, ManifestParseError, MissingFile
from core.metrics import MetricsCollector
from core.models import ActivityMatrix
from repositories.base_repository import BaseRepository, PathLike
from repositories.matrix_repository import MatrixRepository
from validators import InputValidator

DEFAULT_MANIFEST = "manifest.txt"


@dataclass(frozen=True)
class ManifestEntry:
    network_id: str
    layer_id: str
    path: Path
    line_number: int

    def describe(self) -> str:
        return f"network '{self.network_id}' layer '{self.layer_id}' (line {self.line_number})"


def natural_key(value: str):
    """Sort key under which 'net2' < 'net10'."""
    return [int(part) if part.isdigit() else part.lower() for part in re.split(r'(\d+)', value)]


def parse_manifest(text: str, base_dir: Path, source: str = "<manifest>") -> List[ManifestEntry]:
    """
    Parse manifest text into entries in file order.

    Raises:
        ManifestParseError: wrong field count or invalid identifier
        DuplicateEntry: a (network, layer) pair appears twice
    """
    entries: List[ManifestEntry] = []
    seen: Dict[tuple, int] = {}

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue

        fields = [f.strip() for f in line.split(',')]
        if len(fields) != 3 or not all(fields):
            raise ManifestParseError(
                f"{source}: line {line_number}: expected 'network_id, layer_id, path', got '{raw.strip()}'"
            )
        network_id, layer_id, rel_path = fields
        for name, value in (("network_id", network_id), ("layer_id", layer_id)):
            if not InputValidator.validate_identifier(value):
                raise ManifestParseError(f"{source}: line {line_number}: invalid {name} '{value}'")

        key = (network_id, layer_id)
        if key in seen:
            raise DuplicateEntry(
                f"{source}: network '{network_id}' layer '{layer_id}' listed on lines "
                f"{seen[key]} and {line_number}"
            )
        seen[key] = line_number

        path = Path(rel_path)
        if not path.is_absolute():
            path = base_dir / path
        entries.append(ManifestEntry(network_id, layer_id, path, line_number))

    if not entries:
        raise ManifestParseError(f"{source}: manifest has no entries")
    return entries


class ActivationRepository(BaseRepository):
    """
    Repository for activation sets.

    Provides methods for:
    - Manifest parsing with per-entry validation
    - Loading ActivityMatrix lists ordered by (layer, network)
    - Grouping by layer
    """

    def __init__(self, matrix_repo: Optional[MatrixRepository] = None, metrics: Optional[MetricsCollector] = None):
        super().__init__(metrics)
        self.matrix_repo = matrix_repo or MatrixRepository(metrics)

    def read_manifest(self, directory: PathLike, manifest: PathLike = DEFAULT_MANIFEST) -> List[ManifestEntry]:
        base = Path(directory)
        manifest_path = Path(manifest)
        if not manifest_path.is_absolute():
            manifest_path = base / manifest_path
        p = self.require_file(manifest_path, "manifest")
        return parse_manifest(p.read_text(encoding='utf-8'), p.parent, str(p))

    def ingest_activations(
        self,
        directory: PathLike,
        manifest: PathLike = DEFAULT_MANIFEST,
        layer: Optional[str] = None,
    ) -> List[ActivityMatrix]:
        """
        Load every matrix a manifest lists.

        Args:
            directory: Directory the manifest (and relative paths) live in
            manifest: Manifest file name or path
            layer: Only load entries of this layer

        Returns:
            ActivityMatrix list ordered by (layer, network), natural sort

        Raises:
            MissingFile: a listed file is absent (entry named)
            ExampleCountMismatch: example counts differ within a layer (both files named)
        """
        entries = self.read_manifest(directory, manifest)
        if layer is not None:
            entries = [e for e in entries if e.layer_id == layer]
            if not entries:
                raise ManifestParseError(f"layer '{layer}' does not appear in the manifest")

        # exact layer id breaks natural-key ties so every layer stays contiguous for groupby
        entries.sort(key=lambda e: (natural_key(e.layer_id), e.layer_id, natural_key(e.network_id), e.network_id))

        mats: List[ActivityMatrix] = []
        for layer_id, group in groupby(entries, key=lambda e: e.layer_id):
            first: Optional[tuple] = None
            for entry in group:
                if not entry.path.is_file():
                    raise MissingFile(f"{entry.describe()}: file not found: {entry.path}")
                data = self.matrix_repo.read_matrix(entry.path)

                if first is None:
                    first = (entry, data.shape[1])
                elif data.shape[1] != first[1]:
                    raise ExampleCountMismatch(
                        f"layer '{layer_id}': {first[0].path} has {first[1]} examples but "
                        f"{entry.path} has {data.shape[1]}"
                    )
                mats.append(ActivityMatrix(entry.network_id, entry.layer_id, data))

        self.logger.info(
            f"Ingested {len(mats)} activation matrices across "
            f"{len({m.layer_id for m in mats})} layer(s) from {directory}"
        )
        return mats


def group_by_layer(mats: List[ActivityMatrix]) -> Dict[str, List[ActivityMatrix]]:
    """Layer id -> matrices, preserving input order."""
    grouped: Dict[str, List[ActivityMatrix]] = {}
    for m in mats:
        grouped.setdefault(m.layer_id, []).append(m)
    return grouped
