"""Tests for Gateaux partial derivatives and energies."""

import math

import numpy as np
import pytest

from frechet_variations.calculus import (
    DiffConfig,
    curve_densities,
    energy,
    energy_series,
    gradient_density,
    partial_derivative,
    total_derivative,
)
from frechet_variations.errors import ConfigurationError, PreconditionError
from frechet_variations.function_space import GridFunction, PeriodicGrid, pair
from frechet_variations.lagrangian import (
    FreeParticle,
    HarmonicField,
    SineGordon,
    UserDensity,
    Wave,
)

FD = DiffConfig(backend="finite-difference")

LAGRANGIANS = [
    FreeParticle(),
    HarmonicField(omega=1.5),
    Wave(c=0.8),
    SineGordon(c=1.0, beta=0.7),
    UserDensity.from_text("0.5*e^2 - 0.5*ux^2 - 0.1*u^4 + 0.2*e*u*cos(x)"),
]


@pytest.fixture
def point():
    grid = PeriodicGrid(16, 2)
    x = grid.nodes
    u = GridFunction(grid, np.column_stack([np.sin(x), 0.5 * np.cos(2 * x)]))
    e = GridFunction(grid, np.column_stack([np.cos(x) + 0.3, np.sin(3 * x)]))
    f = GridFunction(grid, np.column_stack([np.cos(x), 1.0 + 0.0 * x]))
    return grid, u, e, f


@pytest.mark.parametrize("lagrangian", LAGRANGIANS, ids=lambda L: L.kind)
@pytest.mark.parametrize("slot", [1, 2])
def test_analytic_and_finite_difference_agree(lagrangian, slot, point):
    _, u, e, f = point
    analytic = partial_derivative(lagrangian, u, e, f, slot)
    numeric = partial_derivative(lagrangian, u, e, f, slot, FD)
    assert numeric == pytest.approx(analytic, rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("lagrangian", LAGRANGIANS, ids=lambda L: L.kind)
def test_finite_difference_density_matches_analytic_density(lagrangian, point):
    _, u, e, _ = point
    for slot in (1, 2):
        analytic = gradient_density(lagrangian, u, e, slot).density
        numeric = gradient_density(lagrangian, u, e, slot, FD).density
        assert np.allclose(numeric, analytic, atol=1e-6)


def test_partial_derivative_is_linear_in_direction(point):
    _, u, e, f = point
    lagrangian = SineGordon(beta=0.4)
    g = GridFunction(f.grid, np.roll(f.values, 3, axis=0))
    combined = partial_derivative(lagrangian, u, e, 2.0 * f - g, 1)
    separate = 2.0 * partial_derivative(lagrangian, u, e, f, 1) - partial_derivative(
        lagrangian, u, e, g, 1
    )
    assert combined == pytest.approx(separate, rel=1e-12, abs=1e-12)


def test_zero_direction_gives_zero(point):
    grid, u, e, _ = point
    zero = GridFunction.zeros(grid)
    assert partial_derivative(HarmonicField(), u, e, zero, 1, FD) == 0.0


def test_total_derivative_is_sum_of_partials(point):
    _, u, e, f = point
    lagrangian = HarmonicField(omega=2.0)
    total = total_derivative(lagrangian, u, e, f, e)
    expected = pair(gradient_density(lagrangian, u, e, 1), f) + pair(
        gradient_density(lagrangian, u, e, 2), e
    )
    assert total == pytest.approx(expected)


def test_invalid_slot(point):
    _, u, e, f = point
    with pytest.raises(PreconditionError):
        partial_derivative(FreeParticle(), u, e, f, 3)


def test_numeric_only_density_requires_finite_differences(point):
    _, u, e, f = point
    lagrangian = UserDensity.from_text("0.5*e^2", symbolic=False)
    with pytest.raises(ConfigurationError) as info:
        partial_derivative(lagrangian, u, e, f, 2)
    assert info.value.field == "diff.backend"
    assert partial_derivative(lagrangian, u, e, f, 2, FD) == pytest.approx(pair(
        gradient_density(FreeParticle(), u, e, 2), f
    ), rel=1e-6)


@pytest.mark.parametrize(
    "kwargs,field",
    [
        ({"backend": "spectral"}, "diff.backend"),
        ({"fd_step": 0.0}, "diff.fd_step"),
        ({"fd_floor": -1.0}, "diff.fd_floor"),
        ({"fd_order": 3}, "diff.fd_order"),
    ],
)
def test_diff_config_validation(kwargs, field):
    with pytest.raises(ConfigurationError) as info:
        DiffConfig(**kwargs)
    assert info.value.field == field


def test_step_rule_scales_with_base_point():
    cfg = DiffConfig(fd_step=1e-5, fd_floor=1e-7)
    assert cfg.step_for(100.0) == pytest.approx(1e-3)
    assert cfg.step_for(0.0) == pytest.approx(1e-7)
    assert cfg.step_for(1.0, 4.0) == pytest.approx(2.5e-6)


def test_harmonic_energy(point):
    grid, u, e, _ = point
    omega = 1.5
    expected = 0.5 * pair(gradient_density(FreeParticle(), u, e, 2), e) + 0.5 * omega**2 * (
        grid.weight * float(np.sum(u.values**2))
    )
    assert energy(HarmonicField(omega), u, e) == pytest.approx(expected)
    assert energy(HarmonicField(omega), u, e, FD) == pytest.approx(expected, rel=1e-7)


def test_energy_series_matches_pointwise_energy():
    grid = PeriodicGrid(16)
    rng = np.random.default_rng(7)
    positions = rng.standard_normal((5,) + grid.shape)
    velocities = rng.standard_normal((5,) + grid.shape)
    lagrangian = SineGordon(beta=0.5)
    series = energy_series(lagrangian, grid, positions, velocities)
    for j in range(5):
        pointwise = energy(
            lagrangian, GridFunction(grid, positions[j]), GridFunction(grid, velocities[j])
        )
        assert series[j] == pytest.approx(pointwise, rel=1e-12, abs=1e-12)


def test_curve_densities_backends_agree():
    grid = PeriodicGrid(8)
    t = np.linspace(0.0, 1.0, 4)
    positions = np.sin(grid.nodes)[None, :, None] * np.cos(t)[:, None, None]
    velocities = -np.sin(grid.nodes)[None, :, None] * np.sin(t)[:, None, None]
    lagrangian = Wave(c=2.0)
    for slot in (1, 2):
        analytic = curve_densities(lagrangian, grid, positions, velocities, slot)
        numeric = curve_densities(lagrangian, grid, positions, velocities, slot, FD)
        assert numeric.shape == analytic.shape == positions.shape
        assert np.allclose(numeric, analytic, atol=1e-6)


def test_point_model_derivative_is_classical():
    grid = PeriodicGrid(1, 3)
    u = GridFunction(grid, [[1.0, -2.0, 0.5]])
    e = GridFunction(grid, [[0.0, 1.0, 2.0]])
    f = GridFunction(grid, [[1.0, 1.0, 1.0]])
    # L = 2π(½|e|² − ½ω²|u|²) on the single node
    value = partial_derivative(HarmonicField(omega=2.0), u, e, f, 1)
    assert value == pytest.approx(2 * math.pi * (-4.0) * (1.0 - 2.0 + 0.5))


def _moving_point(grid, xi):
    x = grid.nodes
    u = np.column_stack(
        [np.sin(x) * math.cos(xi) + 0.3 * xi, 0.5 * np.cos(2 * x) * math.sin(2 * xi)]
    )
    du = np.column_stack(
        [-np.sin(x) * math.sin(xi) + 0.3, np.cos(2 * x) * math.cos(2 * xi)]
    )
    ddu = np.column_stack(
        [-np.sin(x) * math.cos(xi), -2.0 * np.cos(2 * x) * math.sin(2 * xi)]
    )
    return u, du, ddu


@pytest.mark.parametrize("lagrangian", LAGRANGIANS, ids=lambda L: L.kind)
@pytest.mark.parametrize("xi", [0.0, 0.4, 1.3])
def test_total_derivative_follows_the_chain_rule(lagrangian, xi):
    grid = PeriodicGrid(16, 2)
    h = 1e-3

    def along(s):
        u, du, _ = _moving_point(grid, s)
        return lagrangian.checked_value(grid, u, du)

    expected = (
        -along(xi + 2 * h) + 8 * along(xi + h) - 8 * along(xi - h) + along(xi - 2 * h)
    ) / (12 * h)
    u, du, ddu = _moving_point(grid, xi)
    velocity = GridFunction(grid, du)
    actual = total_derivative(
        lagrangian, GridFunction(grid, u), velocity, velocity, GridFunction(grid, ddu)
    )
    assert actual == pytest.approx(expected, rel=1e-7, abs=1e-9)
