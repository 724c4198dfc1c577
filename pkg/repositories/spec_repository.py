"""
Spec repository: simulation specs as plain-text `key = value` documents.
"""

import dataclasses
from pathlib import Path
from typing import Any, Dict, Optional

from core.errors import ConfigParseError
from core.models import SimulationSpec
from repositories.base_repository import BaseRepository, PathLike

INT_FIELDS = {"units", "examples", "networks", "runs", "seed", "k", "max_iters", "resamples"}
FLOAT_FIELDS = {"noise_sigma", "split_fraction", "tol", "level"}
STR_FIELDS = {"transform_family", "source", "source_path"}

ALIASES = {
    "family": "transform_family",
    "noise": "noise_sigma",
    "split": "split_fraction",
    "n": "units",
    "m": "examples",
}

NONE_VALUES = {"", "none", "auto"}


def _coerce(key: str, value: str, line_number: int) -> Any:
    if key == "k" and value.lower() in NONE_VALUES:
        return None
    if key == "source_path" and not value:
        return None
    try:
        if key in INT_FIELDS:
            number = float(value)
            if not number.is_integer():
                raise ValueError(value)
            return int(number)
        if key in FLOAT_FIELDS:
            return float(value)
    except ValueError:
        kind = "an integer" if key in INT_FIELDS else "a number"
        raise ConfigParseError(f"'{key}' must be {kind}, got '{value}'", line_number) from None
    return value


def parse_spec_document(text: str) -> Dict[str, Any]:
    """
    Parse `key = value` lines; blank lines and '#' comments are ignored.

    Raises:
        ConfigParseError: malformed line, unknown or repeated key, bad value
    """
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigParseError(f"expected 'key = value', got '{raw.strip()}'", line_number)

        key, value = (part.strip() for part in line.split('=', 1))
        key = ALIASES.get(key.lower(), key.lower())
        if key not in INT_FIELDS | FLOAT_FIELDS | STR_FIELDS:
            raise ConfigParseError(f"unknown key '{key}'", line_number)
        if key in lines:
            raise ConfigParseError(f"'{key}' already set on line {lines[key]}", line_number)

        values[key] = _coerce(key, value, line_number)
        lines[key] = line_number

    return values


def spec_from_values(values: Dict[str, Any], base: Optional[SimulationSpec] = None) -> SimulationSpec:
    """Overlay `values` (None entries skipped, except k) onto `base`."""
    updates = {key: value for key, value in values.items() if value is not None or key == "k"}
    return dataclasses.replace(base or SimulationSpec(), **updates)


def format_spec_document(spec: SimulationSpec) -> str:
    lines = ["# srmkit simulation spec"]
    for field in dataclasses.fields(spec):
        value = getattr(spec, field.name)
        if value is None:
            value = "auto" if field.name == "k" else ""
        lines.append(f"{field.name} = {value}")
    return "\n".join(lines) + "\n"


class SpecRepository(BaseRepository):
    """Reads and writes simulation spec documents."""

    def load_spec(self, path: PathLike, base: Optional[SimulationSpec] = None) -> SimulationSpec:
        """
        Load a spec document; a relative source_path resolves against the
        document's directory.
        """
        p = self.require_file(path, "config document")
        values = parse_spec_document(p.read_text(encoding='utf-8'))

        source_path = values.get("source_path")
        if source_path and not Path(source_path).is_absolute():
            values["source_path"] = str(p.parent / source_path)

        self.logger.debug(f"Loaded {len(values)} spec values from {p}")
        return spec_from_values(values, base)

    def write_spec(self, spec: SimulationSpec, path: PathLike) -> Path:
        target = Path(path)
        with self.atomic_write(target, "w") as fh:
            fh.write(format_spec_document(spec))
        return target
