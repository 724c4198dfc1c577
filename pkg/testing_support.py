"""
Shared helpers for the srmkit test suites.

Suites are plain `test_*` functions (collectable by pytest) and can also be
run directly: `run_suite(globals(), "TITLE")` executes them in file order and
prints a summary.
"""

import contextlib
import inspect
import sys
import tempfile
import traceback
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Type

import numpy as np

from core.matcore import random_orthogonal, standardize_columns
from core.models import ActivityMatrix
from repositories.matrix_repository import MatrixRepository


@contextlib.contextmanager
def expect_raises(exc_type: Type[BaseException], match: Optional[str] = None) -> Iterator[dict]:
    """
    Assert that the block raises `exc_type` (optionally with `match` in its message).

    Usage:
        with expect_raises(KTooLarge, "min n_i") as caught:
            fit_srm(mats, k=99)
        caught["error"]  # the exception instance
    """
    caught: dict = {}
    try:
        yield caught
    except exc_type as e:
        caught["error"] = e
        if match is not None and match not in str(e):
            raise AssertionError(f"{exc_type.__name__} message {str(e)!r} does not contain {match!r}")
    else:
        raise AssertionError(f"expected {exc_type.__name__} to be raised")


@contextlib.contextmanager
def temp_dir() -> Iterator[Path]:
    with tempfile.TemporaryDirectory(prefix="srmkit-test-") as name:
        yield Path(name)


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def mixed_networks(
    n: int,
    m: int,
    networks: int,
    seed: int = 0,
    layer: str = "layer1",
    noise: float = 0.0,
) -> List[ActivityMatrix]:
    """X_i = Q_i H (+ noise) with mean-preserving random rotations Q_i and standardized H."""
    generator = rng(seed)
    h = standardize_columns(generator.standard_normal((n, m)))
    mats = []
    for i in range(networks):
        x = random_orthogonal(n, generator, preserve_mean=True) @ h
        if noise:
            x = x + noise * generator.standard_normal(x.shape)
        mats.append(ActivityMatrix(f"net{i}", layer, x))
    return mats


def write_manifest(directory: Path, mats: List[ActivityMatrix], fmt: str = "binary",
                   name: str = "manifest.txt") -> Path:
    """Write every matrix plus a manifest listing them; returns the manifest path."""
    repo = MatrixRepository()
    lines = ["# network_id, layer_id, path"]
    for a in mats:
        file_name = MatrixRepository.file_name(f"{a.layer_id}_{a.network_id}", fmt)
        repo.write_matrix(a.data, directory / file_name, fmt)
        lines.append(f"{a.network_id}, {a.layer_id}, {file_name}")
    manifest = directory / name
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def collect_tests(namespace: Dict[str, object]) -> List[Callable[[], None]]:
    tests = [
        obj for name, obj in namespace.items()
        if name.startswith("test_") and inspect.isfunction(obj)
    ]
    return sorted(tests, key=lambda f: f.__code__.co_firstlineno)


def run_suite(namespace: Dict[str, object], title: str) -> bool:
    """Run every test_* function in `namespace`; print a summary; True if all passed."""
    print("\n" + "=" * 60)
    print(f"🧪 {title}")
    print("=" * 60)

    failures = []
    tests = collect_tests(namespace)
    for test in tests:
        try:
            test()
            print(f"✅ {test.__name__}")
        except Exception as e:
            failures.append((test.__name__, e))
            print(f"❌ {test.__name__}: {type(e).__name__}: {e}")
            traceback.print_exc(limit=3)

    print("-" * 60)
    print(f"Total: {len(tests)}  ✅ Passed: {len(tests) - len(failures)}  ❌ Failed: {len(failures)}")
    return not failures


def main_for(namespace: Dict[str, object], title: str):
    sys.exit(0 if run_suite(namespace, title) else 1)
