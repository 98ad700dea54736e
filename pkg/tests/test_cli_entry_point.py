"""Tests for the command line entry point."""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent

pytestmark = pytest.mark.integration


def test_module_executes_help() -> None:
    """Ensure ``python -m frechet_variations --help`` runs successfully."""
    result = subprocess.run(
        [sys.executable, "-m", "frechet_variations", "--help"],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
        cwd=REPO_ROOT,
    )
    assert result.returncode == 0
    assert "usage" in result.stdout.lower()
    assert "dbr-check" in result.stdout


def test_module_reports_usage_errors() -> None:
    result = subprocess.run(
        [sys.executable, "-m", "frechet_variations", "residual", "--config", "missing.cfg"],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
        cwd=REPO_ROOT,
    )
    assert result.returncode == 2
    assert result.stdout == ""
    assert "missing.cfg" in result.stderr
