"""Observed orders along refinement ladders."""

import pytest

from frechet_variations.el_solver import (
    HarmonicCosine,
    StraightLine,
    TravelingWave,
    convergence_study,
    fit_order,
)
from frechet_variations.errors import InsufficientDataError, PreconditionError
from frechet_variations.lagrangian import FreeParticle, HarmonicField, Wave


def test_fit_order_recovers_a_power_law():
    steps = [0.1, 0.05, 0.025, 0.0125]
    assert fit_order(steps, [3.0 * s**2 for s in steps]) == pytest.approx(2.0)


def test_fit_order_ignores_points_at_the_floor():
    assert fit_order([0.1, 0.05, 0.025], [1e-3, 1e-14, 1e-15]) is None


@pytest.mark.slow
def test_wave_residual_is_fourth_order():
    sizes = [16, 32, 64, 128]
    result = convergence_study(Wave(c=1.0), TravelingWave(), sizes, sizes)
    assert result.status == "fitted"
    assert result.order >= 3.5
    assert list(result.table["N"]) == sizes
    assert result.table["error"].is_monotonic_decreasing


@pytest.mark.slow
def test_leapfrog_is_second_order():
    result = convergence_study(
        HarmonicField(omega=1.0),
        HarmonicCosine(omega=1.0),
        [16],
        [64, 128, 256, 512],
        mode="ivp",
    )
    assert 1.8 <= result.order <= 2.2
    assert list(result.table["M"]) == [64, 128, 256, 512]


def test_free_line_sits_at_the_error_floor():
    result = convergence_study(FreeParticle(), StraightLine("0", "1"), [16], [16, 32, 64])
    assert result.order is None
    assert result.status == "floor"


def test_two_point_ladder_is_rejected():
    with pytest.raises(InsufficientDataError):
        convergence_study(FreeParticle(), StraightLine(), [16, 32], [16, 32])


def test_ladder_lists_must_agree():
    with pytest.raises(PreconditionError):
        convergence_study(FreeParticle(), StraightLine(), [16, 32], [16, 32, 64])
    with pytest.raises(PreconditionError):
        convergence_study(FreeParticle(), StraightLine(), [16], [16, 32, 64], mode="bdf")
