"""Logging helpers for frechet_variations.

Diagnostics always go to the standard error stream so that standard output
stays reserved for the run summary.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Mapping, Optional

CONSOLE_FORMAT = "%(message)s"
TRANSCRIPT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def get_logger(name: str) -> logging.Logger:
    """Return a module-scoped logger."""
    return logging.getLogger(name)


def resolve_level(log_level: str = "INFO", verbose: bool = False, quiet: bool = False) -> str:
    """Return the console level name; ``verbose`` wins over ``quiet``."""
    if verbose:
        return "DEBUG"
    if quiet:
        return "WARNING"
    return log_level.upper()


def _console_handler(level: str) -> logging.Handler:
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(getattr(logging, level.upper(), logging.INFO))
    handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    return handler


def _transcript_handler(log_file: Path) -> logging.Handler:
    log_file.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(log_file, encoding="utf-8")
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(TRANSCRIPT_FORMAT))
    return handler


def setup_logging(level: str = "INFO", log_file: Optional[Path] = None) -> None:
    """Replace the root handlers with a stderr console handler at ``level``.

    With ``log_file`` a DEBUG transcript is written there as well; its parent
    directory is created when missing.
    """
    root = logging.getLogger()
    root.setLevel(logging.DEBUG)
    root.handlers.clear()
    root.addHandler(_console_handler(level))
    if log_file is not None:
        root.addHandler(_transcript_handler(log_file))


def log_summary(
    logger: logging.Logger, title: str, values: Mapping[str, object]
) -> None:
    """Log ``values`` as an aligned ``key: value`` block under ``title``."""
    logger.info(title)
    width = max((len(key) for key in values), default=0)
    for key, value in values.items():
        if isinstance(value, float):
            text = f"{value:.6e}"
        else:
            text = str(value)
        logger.info("  %s: %s", key.ljust(width), text)
