"""Finite-difference stencils shared by the spatial and temporal operators.

Spatial stencils are periodic (the base manifold is the circle). Temporal
stencils act on the leading axis of a sample stack and fall back to one-sided
formulas of the same order at the interval ends.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import PreconditionError, UnsupportedOrderError

SUPPORTED_ORDERS = (2, 4)

# Offsets and weights of the centered first-derivative stencils, in units of 1/h.
CENTERED_FIRST_DERIVATIVE = {
    2: ((-1, 1), (-1.0 / 2.0, 1.0 / 2.0)),
    4: ((-2, -1, 1, 2), (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)),
}


def _check_order(order: int) -> None:
    if order not in SUPPORTED_ORDERS:
        raise UnsupportedOrderError(
            f"stencil order must be one of {SUPPORTED_ORDERS}, got {order}"
        )


def stencil_width(order: int) -> int:
    """Return the number of nodes touched by the centered stencil."""
    _check_order(order)
    return order + 1


def periodic_derivative(
    values: np.ndarray, spacing: float, order: int = 4, axis: int = -2
) -> np.ndarray:
    """Apply the centered periodic first-derivative stencil along ``axis``."""
    _check_order(order)
    size = values.shape[axis]
    if size < stencil_width(order):
        raise PreconditionError(
            f"stencil of width {stencil_width(order)} is wider than a grid of "
            f"{size} nodes"
        )
    offsets, weights = CENTERED_FIRST_DERIVATIVE[order]
    result = np.zeros_like(values, dtype=float)
    for offset, weight in zip(offsets, weights):
        # roll by -offset brings u[i + offset] to position i
        result += weight * np.roll(values, -offset, axis=axis)
    return result / spacing


def time_derivative(samples: np.ndarray, dt: float, order: int = 4) -> np.ndarray:
    """Differentiate a sample stack along axis 0.

    Interior nodes use the centered stencil, the nodes near both ends use
    one-sided formulas of the same order.
    """
    _check_order(order)
    f = np.asarray(samples, dtype=float)
    count = f.shape[0]
    if count < order + 1:
        raise PreconditionError(
            f"order-{order} time derivative needs at least {order + 1} samples, "
            f"got {count}"
        )
    out = np.empty_like(f)
    if order == 2:
        out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dt)
        out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt)
        out[-1] = (f[-3] - 4.0 * f[-2] + 3.0 * f[-1]) / (2.0 * dt)
        return out

    scale = 12.0 * dt
    out[2:-2] = (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / scale
    out[0] = (
        -25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]
    ) / scale
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / scale
    out[-2] = (
        -f[-5] + 6.0 * f[-4] - 18.0 * f[-3] + 10.0 * f[-2] + 3.0 * f[-1]
    ) / scale
    out[-1] = (
        3.0 * f[-5] - 16.0 * f[-4] + 36.0 * f[-3] - 48.0 * f[-2] + 25.0 * f[-1]
    ) / scale
    return out


def zero_extended_time_derivative(
    samples: np.ndarray, dt: float, order: int = 4
) -> np.ndarray:
    """Centered time derivative of samples that vanish beyond both ends."""
    _check_order(order)
    f = np.asarray(samples, dtype=float)
    pad = order // 2
    widths = [(pad, pad)] + [(0, 0)] * (f.ndim - 1)
    padded = np.pad(f, widths)
    offsets, weights = CENTERED_FIRST_DERIVATIVE[order]
    count = f.shape[0]
    out = np.zeros_like(f)
    for offset, weight in zip(offsets, weights):
        out += weight * padded[pad + offset : pad + offset + count]
    return out / dt


def interior_slice(count: int, order: int = 4) -> slice:
    """Nodes whose residual stencil composed with the lift stencil is centered.

    The lift is one-sided on ``order // 2`` nodes at each end and the residual
    differentiates the lift once more, so ``order`` nodes are dropped per side.
    """
    _check_order(order)
    return slice(order, count - order)


def central_difference(phi: Callable[[float], float], step: float, order: int = 4) -> float:
    """Approximate ``phi'(0)`` by a centered difference with spacing ``step``."""
    _check_order(order)
    if not step > 0.0:
        raise PreconditionError(f"difference step must be positive, got {step}")
    if order == 2:
        return (phi(step) - phi(-step)) / (2.0 * step)
    return (
        -phi(2.0 * step) + 8.0 * phi(step) - 8.0 * phi(-step) + phi(-2.0 * step)
    ) / (12.0 * step)
