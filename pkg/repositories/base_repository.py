"""
Base repository with common file operations.
Provides atomic writes and path resolution for every on-disk artifact.
"""

import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Union

from core.errors import MissingFile
from core.metrics import MetricsCollector

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class BaseRepository:
    """
    Base repository for file-backed artifacts.

    All repositories inherit from this class to get:
    - Atomic writes (temp file in the target directory, then rename)
    - Existence checks that raise MissingFile
    - Logging and optional metrics
    """

    def __init__(self, metrics: Optional[MetricsCollector] = None):
        """
        Initialize repository.

        Args:
            metrics: Metrics collector for file counters (optional)
        """
        self.metrics = metrics
        self.logger = logging.getLogger(f"{self.__class__.__module__}.{self.__class__.__name__}")

    @contextmanager
    def atomic_write(self, path: PathLike, mode: str = "wb"):
        """
        Open a temporary file next to `path` and move it into place on success.

        Usage:
            with self.atomic_write(path) as fh:
                fh.write(payload)
        """
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)

        fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
        try:
            newline = "" if "b" not in mode else None
            encoding = "utf-8" if "b" not in mode else None
            with os.fdopen(fd, mode, newline=newline, encoding=encoding) as fh:
                yield fh
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp_name, target)
        except BaseException:
            self.logger.error(f"Write to {target} failed; discarding temporary file")
            try:
                os.unlink(tmp_name)
            except FileNotFoundError:
                pass
            raise

    def require_file(self, path: PathLike, what: str = "file") -> Path:
        """Return `path` as a Path, raising MissingFile if it does not exist."""
        p = Path(path)
        if not p.is_file():
            raise MissingFile(f"{what} not found: {p}")
        return p

    def _count(self, counter: str):
        if self.metrics is not None:
            self.metrics.inc_counter(counter)
