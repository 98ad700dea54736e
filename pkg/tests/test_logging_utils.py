import logging
import sys

import pytest

from frechet_variations.logging_utils import (
    get_logger,
    log_summary,
    resolve_level,
    setup_logging,
)


@pytest.fixture
def restore_root():
    root = logging.getLogger()
    saved = root.handlers[:], root.level
    yield root
    root.handlers.clear()
    root.handlers.extend(saved[0])
    root.setLevel(saved[1])


def test_transcript_captures_debug_in_new_directory(tmp_path, restore_root):
    log_file = tmp_path / "logs" / "run.log"
    setup_logging(level="WARNING", log_file=log_file)
    logger = get_logger("frechet_variations.test")
    logger.info("solver started")
    logger.debug("iteration 3")
    for handler in restore_root.handlers:
        handler.flush()
    content = log_file.read_text(encoding="utf-8")
    assert "solver started" in content
    assert "DEBUG - iteration 3" in content


def test_console_handler_uses_stderr_and_level(restore_root):
    setup_logging(level="warning")
    (console,) = restore_root.handlers
    assert console.level == logging.WARNING
    assert console.stream is sys.stderr


def test_setup_logging_replaces_previous_handlers(restore_root):
    setup_logging()
    setup_logging()
    assert len(restore_root.handlers) == 1


@pytest.mark.parametrize(
    "log_level, verbose, quiet, expected",
    [
        ("INFO", False, False, "INFO"),
        ("error", False, False, "ERROR"),
        ("INFO", True, False, "DEBUG"),
        ("INFO", False, True, "WARNING"),
        ("ERROR", True, True, "DEBUG"),
    ],
)
def test_resolve_level(log_level, verbose, quiet, expected):
    assert resolve_level(log_level, verbose=verbose, quiet=quiet) == expected


def test_log_summary_aligns_keys(caplog):
    logger = get_logger("frechet_variations.test")
    with caplog.at_level(logging.INFO, logger="frechet_variations.test"):
        log_summary(logger, "residual summary", {"N": 16, "residual_max": 0.5})
    messages = [record.getMessage() for record in caplog.records]
    assert messages[0] == "residual summary"
    assert messages[1] == "  N           : 16"
    assert messages[2] == "  residual_max: 5.000000e-01"
