"""Tests for test variations and the constancy test for h = g − ∫f."""

import math

import numpy as np
import pytest

from frechet_variations.calculus import curve_densities
from frechet_variations.dubois_reymond import (
    BumpProfile,
    VariationField,
    dbr_defect,
    dbr_report,
    derivative_weak_residual,
    make_test_variation,
    minimum_margin,
    random_test_variations,
    separating_variation,
    weak_form_residual,
)
from frechet_variations.el_solver import HarmonicCosine, StraightLine
from frechet_variations.errors import (
    DimensionError,
    PreconditionError,
    SupportViolationError,
)
from frechet_variations.function_space import (
    DualDensity,
    GridFunction,
    PeriodicGrid,
    sup_norm,
)
from frechet_variations.lagrangian import HarmonicField
from frechet_variations.weak_integral import DualCurve, TimeGrid


def profile(grid):
    return 1.0 + 0.5 * np.sin(grid.nodes)[:, None]


def dual(time, grid, fn):
    ell = profile(grid)
    return DualCurve.from_function(time, grid, lambda t: fn(t) * ell)


@pytest.fixture
def interval():
    return TimeGrid(0.0, math.pi, 64)


def test_bump_profiles_vanish_outside_their_support():
    t = np.linspace(0.0, 1.0, 101)
    for shape in ("smooth", "polynomial"):
        bump = BumpProfile(0.5, 0.4, shape)
        values = bump(t)
        assert np.all(np.abs(values[(t <= 0.3) | (t >= 0.7)]) < 1e-12)
        assert values[50] > 0.0
        assert bump.support == pytest.approx((0.3, 0.7))


def test_polynomial_bump_derivative_matches_difference_quotient():
    bump = BumpProfile(0.5, 0.6, "polynomial", amplitude=2.0)
    t = np.array([0.3, 0.45, 0.6, 0.7])
    step = 1e-6
    numeric = (bump(t + step) - bump(t - step)) / (2 * step)
    assert np.allclose(bump.derivative(t), numeric, atol=1e-6)


def test_bump_rejects_bad_parameters():
    with pytest.raises(PreconditionError):
        BumpProfile(0.5, 0.0)
    with pytest.raises(PreconditionError):
        BumpProfile(0.5, 0.2, "triangle")


def test_variation_must_vanish_near_the_ends(grid):
    time = TimeGrid(0.0, 1.0, 32)
    y = GridFunction.constant(grid, 1.0)
    with pytest.raises(SupportViolationError):
        make_test_variation(y, BumpProfile(0.05, 0.1), time)
    samples = np.zeros((33,) + grid.shape)
    samples[1] = 1.0
    with pytest.raises(SupportViolationError):
        VariationField(time, grid, samples)
    with pytest.raises(SupportViolationError):
        VariationField(time, grid, np.zeros((33,) + grid.shape), margin=0.5 * time.dt)


def test_minimum_margin_is_two_steps():
    assert minimum_margin(TimeGrid(0.0, 1.0, 50)) == pytest.approx(0.04)


def test_variation_arithmetic(grid, time_grid):
    y = GridFunction.constant(grid, 2.0)
    mu = make_test_variation(y, BumpProfile(0.5, 0.5), time_grid)
    doubled = mu + mu
    assert np.allclose(doubled.samples, (2.0 * mu).samples)
    assert np.allclose(doubled.derivative, 2.0 * mu.derivative)
    assert doubled[32].values[0, 0] == pytest.approx(2.0 * 2.0 * math.exp(-1.0))


def test_linear_running_integral_is_exactly_constant(interval):
    grid = PeriodicGrid(16)
    f = dual(interval, grid, lambda t: 1.0)
    g = dual(interval, grid, lambda t: t)
    assert dbr_defect(f, g) <= 1e-10
    rng = np.random.default_rng(3)
    for mu in random_test_variations(interval, grid, 50, rng):
        assert abs(weak_form_residual(f, g, mu)) < 1e-10


def test_consistent_pair_has_small_residual_and_defect(interval):
    grid = PeriodicGrid(16)
    f = dual(interval, grid, math.cos)
    g = dual(interval, grid, math.sin)
    assert dbr_defect(f, g) < 1e-5
    rng = np.random.default_rng(4)
    for mu in random_test_variations(interval, grid, 20, rng):
        scale = sup_norm(mu.samples) + sup_norm(mu.derivative)
        assert abs(weak_form_residual(f, g, mu)) < 1e-4 * max(scale, 1.0)


def test_defect_of_inconsistent_pair(interval):
    grid = PeriodicGrid(16)
    f = dual(interval, grid, math.cos)
    g = dual(interval, grid, lambda t: 2.0 * math.sin(t))
    report = dbr_report(f, g)
    # h = sin(t)·l deviates most at t = 0 from its mean (2/π)·l
    assert report.defect == pytest.approx(2.0 / math.pi * 1.5, rel=1e-4)
    frame = report.to_frame()
    assert list(frame.columns) == ["t", "deviation"]
    assert len(frame) == interval.M + 1


def test_separating_variation_detects_a_nonconstant_h(interval):
    grid = PeriodicGrid(16)
    f = dual(interval, grid, math.cos)
    g = dual(interval, grid, lambda t: 2.0 * math.sin(t))
    mu = separating_variation(f, g)
    mu.check_support()
    residual = weak_form_residual(f, g, mu)
    assert residual > 0.1 * dbr_defect(f, g) * sup_norm(mu.samples)


def test_separating_variation_needs_a_nonconstant_h(interval):
    zero = DualCurve.constant(interval, DualDensity.zeros(PeriodicGrid(8)))
    with pytest.raises(PreconditionError):
        separating_variation(zero, zero)


def test_derivative_weak_residual_vanishes_for_constant_curves(grid, time_grid, rng):
    constant = DualCurve.constant(time_grid, DualDensity(grid, profile(grid)))
    for mu in random_test_variations(time_grid, grid, 10, rng):
        assert abs(derivative_weak_residual(constant, mu)) < 1e-12


def test_derivative_weak_residual_detects_time_dependence(grid, time_grid):
    moving = dual(time_grid, grid, lambda t: t)
    y = GridFunction.sample(grid, lambda x: 1.0 + 0.5 * np.sin(x))
    mu = make_test_variation(y, BumpProfile(0.5, 0.5), time_grid)
    # ∫ t·μ′ = −∫ μ < 0 for a positive bump
    assert derivative_weak_residual(moving, mu) < -1e-3


def test_curves_must_share_grids(grid, time_grid):
    f = DualCurve.constant(time_grid, DualDensity.zeros(grid))
    g = DualCurve.constant(time_grid, DualDensity.zeros(PeriodicGrid(16)))
    with pytest.raises(DimensionError):
        dbr_report(f, g)


def test_random_variations_are_reproducible(grid, time_grid):
    first = random_test_variations(time_grid, grid, 5, np.random.default_rng(9))
    second = random_test_variations(time_grid, grid, 5, np.random.default_rng(9))
    for a, b in zip(first, second):
        assert np.array_equal(a.samples, b.samples)


def _density_pair(lagrangian, curve):
    positions, velocities = curve.samples, curve.velocities
    f = curve_densities(lagrangian, curve.grid, positions, velocities, 1)
    g = curve_densities(lagrangian, curve.grid, positions, velocities, 2)
    return DualCurve(curve.time, curve.grid, f), DualCurve(curve.time, curve.grid, g)


def test_critical_curve_has_constant_momentum_balance():
    grid = PeriodicGrid(16)
    time = TimeGrid(0.0, 1.0, 64)
    f, g = _density_pair(HarmonicField(omega=1.0), HarmonicCosine().curve(time, grid))
    assert dbr_defect(f, g) <= 1e-6


def test_non_critical_line_has_the_expected_defect():
    grid = PeriodicGrid(16)
    time = TimeGrid(0.0, 1.0, 64)
    f, g = _density_pair(HarmonicField(omega=1.0), StraightLine("1", "1").curve(time, grid))
    # h = 1 + t + t²/2 has mean 5/3 and deviates most at t = 1
    assert dbr_defect(f, g) == pytest.approx(5.0 / 6.0, rel=1e-8)


def test_randomized_pairs_split_into_constant_and_varying(rng):
    grid = PeriodicGrid(8, 2)
    time = TimeGrid(0.0, 1.0, 64)
    t = time.nodes[:, None, None]
    fine = np.linspace(0.0, 1.0, 20001)
    separated = 0
    for trial in range(100):
        coefficients = rng.standard_normal((3,) + grid.shape)
        base = rng.standard_normal(grid.shape)
        f_samples = coefficients[0] + coefficients[1] * t + coefficients[2] * t**2
        running = (
            coefficients[0] * t + coefficients[1] * t**2 / 2 + coefficients[2] * t**3 / 3
        )
        f = DualCurve(time, grid, f_samples)
        if trial % 2 == 0:
            g = DualCurve(time, grid, running + base[None])
            assert dbr_defect(f, g) <= 1e-10
            (mu,) = random_test_variations(time, grid, 1, rng)
            scale = sup_norm(f.samples) + sup_norm(g.samples)
            assert abs(weak_form_residual(f, g, mu)) <= 1e-9 * scale
            continue
        kappa, omega = rng.uniform(0.5, 2.0), rng.uniform(2.0, 6.0)
        direction = rng.standard_normal(grid.shape)
        wiggle = np.sin(omega * t) * direction[None]
        g = DualCurve(time, grid, running + base[None] + kappa * wiggle)
        mean = (1.0 - math.cos(omega)) / omega
        spread = np.max(np.abs(np.sin(omega * fine) - mean))
        analytic = kappa * sup_norm(direction) * spread
        assert dbr_defect(f, g) >= 0.9 * analytic
        if separated < 20:
            assert weak_form_residual(f, g, separating_variation(f, g)) > 0.0
            separated += 1
