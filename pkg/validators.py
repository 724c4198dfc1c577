"""
Value validation for srmkit.
Checks identifiers, flag values and simulation specs before any numerics run.
"""

import math
import re
import logging
from typing import Any, List, Optional

from core.errors import SpecValidationError
from core.models import SimulationSpec, TRANSFORM_FAMILIES, SOURCES

logger = logging.getLogger(__name__)


class InputValidator:
    """Predicate checks for single values."""

    # Network / layer identifiers as they appear in manifests and file names
    IDENTIFIER_PATTERN = re.compile(r'^[A-Za-z0-9_.\-]{1,128}$')

    @staticmethod
    def validate_identifier(value: Any) -> bool:
        """Validate a network or layer id."""
        if not isinstance(value, str):
            return False
        return bool(InputValidator.IDENTIFIER_PATTERN.match(value))

    @staticmethod
    def validate_positive_int(value: Any) -> bool:
        try:
            return int(value) == value and int(value) >= 1
        except (ValueError, TypeError):
            return False

    @staticmethod
    def validate_fraction(value: Any) -> bool:
        """Strictly inside (0, 1)."""
        try:
            return 0.0 < float(value) < 1.0
        except (ValueError, TypeError):
            return False

    @staticmethod
    def validate_nonnegative(value: Any) -> bool:
        try:
            v = float(value)
        except (ValueError, TypeError):
            return False
        return math.isfinite(v) and v >= 0.0


class SpecValidator:
    """Validates SimulationSpec values; collects every problem before raising."""

    @staticmethod
    def problems(spec: SimulationSpec) -> List[str]:
        found = []
        check = InputValidator

        if not check.validate_positive_int(spec.units):
            found.append(f"units must be >= 1, got {spec.units}")
        if not check.validate_positive_int(spec.examples) or spec.examples < 4:
            found.append(f"examples must be >= 4 (two per split), got {spec.examples}")
        if not check.validate_positive_int(spec.networks) or spec.networks < 2:
            found.append(f"networks must be >= 2, got {spec.networks}")
        if spec.transform_family not in TRANSFORM_FAMILIES:
            found.append(
                f"transform_family must be one of {', '.join(TRANSFORM_FAMILIES)}, got '{spec.transform_family}'"
            )
        if spec.source not in SOURCES:
            found.append(f"source must be one of {', '.join(SOURCES)}, got '{spec.source}'")
        if spec.source == "supplied-matrix" and not spec.source_path:
            found.append("source 'supplied-matrix' requires source_path")
        if not check.validate_nonnegative(spec.noise_sigma):
            found.append(f"noise_sigma must be a finite value >= 0, got {spec.noise_sigma}")
        if not check.validate_fraction(spec.split_fraction):
            found.append(f"split_fraction must be in (0, 1), got {spec.split_fraction}")
        if not check.validate_positive_int(spec.runs):
            found.append(f"runs must be >= 1, got {spec.runs}")
        if not isinstance(spec.seed, int) or isinstance(spec.seed, bool) or spec.seed < 0:
            found.append(f"seed must be a non-negative integer, got {spec.seed}")
        if spec.k is not None and not check.validate_positive_int(spec.k):
            found.append(f"k must be >= 1, got {spec.k}")
        if spec.k is not None and check.validate_positive_int(spec.units) and spec.k > spec.units:
            found.append(f"k={spec.k} exceeds units={spec.units}")
        if not check.validate_positive_int(spec.max_iters):
            found.append(f"max_iters must be >= 1, got {spec.max_iters}")
        if not check.validate_nonnegative(spec.tol):
            found.append(f"tol must be >= 0, got {spec.tol}")
        if not check.validate_positive_int(spec.resamples):
            found.append(f"resamples must be >= 1, got {spec.resamples}")
        if not check.validate_fraction(spec.level):
            found.append(f"level must be in (0, 1), got {spec.level}")

        return found

    @staticmethod
    def validate(spec: SimulationSpec) -> SimulationSpec:
        """
        Raises:
            SpecValidationError: listing every invalid field
        """
        found = SpecValidator.problems(spec)
        if found:
            for problem in found:
                logger.debug(f"Invalid simulation spec: {problem}")
            raise SpecValidationError("invalid simulation spec: " + "; ".join(found))
        return spec


def split_sizes(examples: int, split_fraction: float) -> Optional[tuple]:
    """Alignment/test column counts, each at least 2; None if impossible."""
    alignment = int(round(split_fraction * examples))
    alignment = min(max(alignment, 2), examples - 2)
    if alignment < 2:
        return None
    return alignment, examples - alignment
