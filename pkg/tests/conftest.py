"""Pytest configuration and fixtures for the test suite."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure that the application source directory is importable during tests.
SRC_PATH = Path(__file__).resolve().parent.parent / "src"
sys.path.insert(0, str(SRC_PATH))

from frechet_variations.function_space import PeriodicGrid  # noqa: E402
from frechet_variations.weak_integral import TimeGrid  # noqa: E402

CONFIG_SAMPLES = Path(__file__).resolve().parent.parent / "config" / "config-sample"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def grid() -> PeriodicGrid:
    return PeriodicGrid(32)


@pytest.fixture
def time_grid() -> TimeGrid:
    return TimeGrid(0.0, 1.0, 64)


@pytest.fixture
def config_samples() -> Path:
    return CONFIG_SAMPLES
