"""
Run context for structured logging.
Tags log records with the command and simulation run being executed.
"""

import logging
import uuid
from typing import Optional, Dict, Any
from contextvars import ContextVar
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)


@dataclass
class RunData:
    """Identity of the unit of work currently executing."""

    run_id: str
    command: Optional[str] = None
    run_index: Optional[int] = None
    seed: Optional[int] = None
    metadata: Dict[str, Any] = field(default_factory=dict)


_run_context: ContextVar[Optional[RunData]] = ContextVar('run_context', default=None)


class RunContext:
    """
    Context manager for run tracking.

    Usage:
        with RunContext(command="simulate", run_index=3, seed=1234):
            logger.info("Fitting SRM")  # record carries command and run index

    Nested contexts inherit the command of the enclosing one when not given.
    """

    def __init__(
        self,
        command: Optional[str] = None,
        run_index: Optional[int] = None,
        seed: Optional[int] = None,
        run_id: Optional[str] = None,
        **metadata
    ):
        self.run_id = run_id or uuid.uuid4().hex[:12]
        self.command = command
        self.run_index = run_index
        self.seed = seed
        self.metadata = metadata
        self._token = None

    def __enter__(self):
        parent = _run_context.get()
        command = self.command
        if command is None and parent is not None:
            command = parent.command

        data = RunData(
            run_id=self.run_id,
            command=command,
            run_index=self.run_index,
            seed=self.seed,
            metadata=self.metadata
        )
        self._token = _run_context.set(data)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self._token:
            _run_context.reset(self._token)

    @staticmethod
    def get_current() -> Optional[RunData]:
        """Get current run data."""
        return _run_context.get()


class RunContextFilter(logging.Filter):
    """
    Logging filter that adds run data to log records.

    Usage:
        handler = logging.StreamHandler()
        handler.addFilter(RunContextFilter())
    """

    def filter(self, record: logging.LogRecord) -> bool:
        data = RunContext.get_current()

        record.run_id = data.run_id if data else '-'
        record.command = (data.command if data else None) or '-'
        run_index = data.run_index if data else None
        record.run_index = '-' if run_index is None else run_index

        return True
