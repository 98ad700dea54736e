import numpy as np
import pytest

from frechet_variations.errors import PreconditionError, UnsupportedOrderError
from frechet_variations.stencils import (
    central_difference,
    interior_slice,
    periodic_derivative,
    stencil_width,
    time_derivative,
    zero_extended_time_derivative,
)


def test_stencil_width_and_unsupported_order():
    assert stencil_width(2) == 3
    assert stencil_width(4) == 5
    with pytest.raises(UnsupportedOrderError):
        stencil_width(6)


@pytest.mark.parametrize("order", [2, 4])
def test_periodic_derivative_is_exact_on_constants(order):
    values = np.full((16, 2), 3.5)
    assert np.allclose(periodic_derivative(values, 0.1, order), 0.0)


def test_periodic_derivative_of_sine_is_fourth_order():
    errors = []
    for n in (16, 32, 64):
        x = 2 * np.pi * np.arange(n) / n
        d = periodic_derivative(np.sin(x)[:, None], 2 * np.pi / n, 4)
        errors.append(np.max(np.abs(d[:, 0] - np.cos(x))))
    slopes = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(slopes > 3.8)


def test_periodic_derivative_rejects_small_grid():
    with pytest.raises(PreconditionError):
        periodic_derivative(np.zeros((4, 1)), 0.1, 4)


@pytest.mark.parametrize("order", [2, 4])
def test_time_derivative_exact_on_polynomials_of_its_order(order):
    t = np.linspace(0.0, 1.0, 11)
    samples = t**order
    expected = order * t ** (order - 1)
    assert np.allclose(time_derivative(samples, t[1] - t[0], order), expected, atol=1e-10)


def test_time_derivative_needs_enough_samples():
    with pytest.raises(PreconditionError):
        time_derivative(np.zeros(4), 0.1, 4)


def test_zero_extended_derivative_matches_centered_stencil_in_the_interior():
    t = np.linspace(0.0, 1.0, 21)
    samples = np.sin(np.pi * t) ** 4
    dt = t[1] - t[0]
    full = time_derivative(samples, dt, 4)
    extended = zero_extended_time_derivative(samples, dt, 4)
    assert np.allclose(full[2:-2], extended[2:-2])


def test_interior_slice_drops_order_nodes_per_side():
    assert interior_slice(17, 4) == slice(4, 13)
    assert interior_slice(17, 2) == slice(2, 15)


def test_central_difference_on_cubic_is_exact():
    phi = lambda s: 1.0 + 2.0 * s - s**2 + 0.5 * s**3  # noqa: E731
    assert central_difference(phi, 0.1, 4) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(PreconditionError):
        central_difference(phi, 0.0)
