"""
Logging configuration module for srmkit.
Provides file rotation, console output and per-layer log files.
"""

import logging
import logging.handlers
import sys
from pathlib import Path

from config import LOG_LEVEL, LOG_DIR
from core.run_context import RunContextFilter

DETAILED_FORMAT = (
    '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] '
    '- [%(command)s run=%(run_index)s] - %(message)s'
)
SIMPLE_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

_configured = False


class ConsoleHandler(logging.StreamHandler):
    """Stream handler bound to whatever sys.stderr is at emit time."""

    def __init__(self):
        super().__init__(sys.stderr)

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


def _file_handler(log_file: Path, level: int) -> logging.Handler:
    # 10MB per file, keep 5 backups
    handler = logging.handlers.RotatingFileHandler(
        log_file,
        maxBytes=10 * 1024 * 1024,
        backupCount=5,
        encoding='utf-8'
    )
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(DETAILED_FORMAT, datefmt=DATE_FORMAT))
    handler.addFilter(RunContextFilter())
    return handler


def setup_logger(name, log_file, level=logging.INFO, console=False):
    """
    Setup a logger with file rotation and optional console output.

    Args:
        name: Logger name ('' for the root logger)
        log_file: Path to log file
        level: Logging level
        console: Also attach a stderr handler

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    logger.addHandler(_file_handler(log_file, level))

    if console:
        console_handler = ConsoleHandler()
        console_handler.setLevel(level)
        console_handler.setFormatter(logging.Formatter(SIMPLE_FORMAT, datefmt=DATE_FORMAT))
        logger.addHandler(console_handler)

    return logger


def setup_all_loggers(log_dir=None, level=None):
    """
    Setup all application loggers.

    Args:
        log_dir: Directory for log files (defaults to SRMKIT_LOG_DIR)
        level: Level name overriding SRMKIT_LOG_LEVEL

    Returns:
        Dict of the configured loggers
    """
    global _configured

    log_level = getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO)

    if _configured:
        logging.getLogger().setLevel(log_level)
        return get_loggers()

    logs_dir = Path(log_dir or LOG_DIR)
    logs_dir.mkdir(parents=True, exist_ok=True)

    # Main log and console
    main_logger = setup_logger('', logs_dir / "srmkit.log", log_level, console=True)

    # Errors from every module
    main_logger.addHandler(_file_handler(logs_dir / "errors.log", logging.ERROR))

    # Solver and io layers get their own files as well
    solver_logger = logging.getLogger('services')
    solver_logger.addHandler(_file_handler(logs_dir / "solver.log", log_level))
    io_logger = logging.getLogger('repositories')
    io_logger.addHandler(_file_handler(logs_dir / "io.log", log_level))

    _configured = True
    return get_loggers()


def get_loggers():
    return {
        'srmkit': logging.getLogger(),
        'solver': logging.getLogger('services'),
        'io': logging.getLogger('repositories'),
    }
