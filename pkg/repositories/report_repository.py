"""
Report repository: self-describing JSON reports.

Keys keep insertion order and are written with a 2-space indent so reports
diff cleanly. provenance.generated_at is the only field that differs between
two runs of the same command.
"""

import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

import config
from core.errors import ManifestParseError
from core.models import BootstrapCi
from repositories.base_repository import BaseRepository, PathLike

TIMESTAMP_FIELD = "generated_at"


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and CI objects to plain JSON values; NaN/Inf become None."""
    if isinstance(value, BootstrapCi):
        return to_jsonable(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def conventions_block(**extra) -> Dict[str, Any]:
    """Conventions every metric in a report refers to."""
    block = {
        "vectorization_rule": config.VECTORIZATION_RULE,
        "standardization_policy": config.STANDARDIZATION_POLICY,
        "shared_rsm_rule": config.SHARED_RSM_RULE,
    }
    block.update(extra)
    return block


def build_report(
    command: str,
    spec: Dict[str, Any],
    metrics: Dict[str, Any],
    conventions: Dict[str, Any],
    seed: Optional[int],
    generated_at: Optional[str] = None,
) -> Dict[str, Any]:
    """
    Assemble a report in canonical key order.

    Args:
        command: Producing subcommand
        spec: Echo of every resolved parameter (defaults included)
        metrics: Named scalar / CI entries
        conventions: Conventions the metrics were computed under
        seed: Seed that replays the numbers
        generated_at: ISO timestamp (defaults to now, UTC)
    """
    return {
        "schema_version": config.REPORT_SCHEMA_VERSION,
        "command": command,
        "spec": to_jsonable(spec),
        "metrics": to_jsonable(metrics),
        "conventions": to_jsonable(conventions),
        "provenance": {
            "seed": seed,
            "toolkit_version": config.TOOLKIT_VERSION,
            TIMESTAMP_FIELD: generated_at or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        },
    }


def without_timestamp(report: Dict[str, Any]) -> Dict[str, Any]:
    """Copy of `report` with the provenance timestamp removed."""
    copy = json.loads(json.dumps(report))
    copy.get("provenance", {}).pop(TIMESTAMP_FIELD, None)
    return copy


def dumps_report(report: Dict[str, Any]) -> str:
    return json.dumps(to_jsonable(report), indent=2, allow_nan=False, ensure_ascii=False) + "\n"


class ReportRepository(BaseRepository):
    """Repository for JSON reports and metadata documents."""

    def write_report(self, report: Dict[str, Any], path: PathLike) -> Path:
        target = Path(path)
        with self.atomic_write(target, "w") as fh:
            fh.write(dumps_report(report))
        self.logger.info(f"Report written to {target}")
        return target

    def read_report(self, path: PathLike) -> Dict[str, Any]:
        p = self.require_file(path, "report")
        try:
            return json.loads(p.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise ManifestParseError(f"{p}: invalid JSON at line {e.lineno}: {e.msg}") from e
