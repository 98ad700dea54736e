"""Gateaux partial derivatives of Lagrangians L: U × E → ℝ.

``D₁L(u,e)(f)`` and ``D₂L(u,e)(f)`` are directional derivatives in the first
and second slot. The analytic backend pairs the closed-form density supplied by
the Lagrangian; the finite-difference backend discretizes the limit ξ → 0 with
a centered difference whose step scales with the base point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import (
    ConfigurationError,
    DimensionError,
    EvaluationError,
    PreconditionError,
)
from .function_space import DualDensity, GridFunction, PeriodicGrid, pair, sup_norm
from .logging_utils import get_logger
from .stencils import central_difference

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .lagrangian import LagrangianSpec

logger = get_logger(__name__)

BACKENDS = ("analytic", "finite-difference")
SLOTS = (1, 2)


@dataclass(frozen=True)
class DiffConfig:
    """How derivatives of Lagrangians are computed."""

    backend: str = "analytic"
    fd_step: float = 1e-5
    fd_floor: float = 1e-7
    fd_order: int = 4

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ConfigurationError(
                "diff.backend",
                f"unknown backend {self.backend!r}; choose one of {', '.join(BACKENDS)}",
            )
        if not self.fd_step > 0.0:
            raise ConfigurationError("diff.fd_step", f"must be positive, got {self.fd_step}")
        if not self.fd_floor > 0.0:
            raise ConfigurationError("diff.fd_floor", f"must be positive, got {self.fd_floor}")
        if self.fd_order not in (2, 4):
            raise ConfigurationError("diff.fd_order", f"must be 2 or 4, got {self.fd_order}")

    def step_for(self, base_scale: float, direction_scale: float = 1.0) -> float:
        """Difference step along a direction of sup-norm ``direction_scale``.

        The perturbation ξ·f has sup-norm ``fd_step`` times the base point's
        sup-norm, never less than ``fd_floor``.
        """
        return max(self.fd_step * base_scale, self.fd_floor) / direction_scale


DEFAULT_DIFF = DiffConfig()


def _check_slot(slot: int) -> None:
    if slot not in SLOTS:
        raise PreconditionError(f"slot must be 1 or 2, got {slot}")


def _check_grids(*functions: GridFunction) -> PeriodicGrid:
    grid = functions[0].grid
    for function in functions[1:]:
        if function.grid != grid:
            raise DimensionError(f"grid mismatch: {grid} vs {function.grid}")
    return grid


def _require_analytic(lagrangian: "LagrangianSpec") -> None:
    if not lagrangian.has_analytic_densities:
        raise ConfigurationError(
            "diff.backend",
            f"{lagrangian.kind} supplies no closed-form densities; "
            "use the finite-difference backend",
        )


def partial_derivative(
    lagrangian: "LagrangianSpec",
    u: GridFunction,
    e: GridFunction,
    f: GridFunction,
    slot: int,
    cfg: DiffConfig = DEFAULT_DIFF,
) -> float:
    """Return D_slot L(u, e)(f)."""
    _check_slot(slot)
    grid = _check_grids(u, e, f)
    if cfg.backend == "analytic":
        _require_analytic(lagrangian)
        return pair(gradient_density(lagrangian, u, e, slot, cfg), f)

    direction_scale = sup_norm(f.values)
    if direction_scale == 0.0:
        return 0.0
    base = u if slot == 1 else e
    step = cfg.step_for(sup_norm(base.values), direction_scale)

    def phi(xi: float) -> float:
        if slot == 1:
            return lagrangian.checked_value(grid, u.values + xi * f.values, e.values)
        return lagrangian.checked_value(grid, u.values, e.values + xi * f.values)

    return float(central_difference(phi, step, cfg.fd_order))


def gradient_density(
    lagrangian: "LagrangianSpec",
    u: GridFunction,
    e: GridFunction,
    slot: int,
    cfg: DiffConfig = DEFAULT_DIFF,
) -> DualDensity:
    """The density ρ with pair(ρ, f) = D_slot L(u, e)(f) for every f."""
    _check_slot(slot)
    grid = _check_grids(u, e)
    if cfg.backend == "analytic":
        _require_analytic(lagrangian)
        density = lagrangian.density(grid, u.values, e.values, slot)
        return DualDensity(grid, density)
    return DualDensity(grid, _directional_density(lagrangian, grid, u.values, e.values, slot, cfg))


def _directional_density(
    lagrangian: "LagrangianSpec",
    grid: PeriodicGrid,
    u: np.ndarray,
    e: np.ndarray,
    slot: int,
    cfg: DiffConfig,
) -> np.ndarray:
    """Assemble a density by differentiating along every coordinate direction.

    All N·m directions are evaluated as one batch; each value is the
    covector coefficient, rescaled by N/(2π) into a density.
    """
    count = grid.n * grid.m
    basis = np.eye(count).reshape((count,) + grid.shape)
    base = u if slot == 1 else e
    step = cfg.step_for(sup_norm(base), 1.0)

    def phi(xi: float) -> np.ndarray:
        if slot == 1:
            values = lagrangian.value(grid, u[None] + xi * basis, e[None])
        else:
            values = lagrangian.value(grid, u[None], e[None] + xi * basis)
        values = np.broadcast_to(values, (count,))
        if not np.all(np.isfinite(values)):
            raise EvaluationError(
                f"{lagrangian.kind} is not finite near the perturbed point", point=(u, e)
            )
        return values

    covector = central_difference(phi, step, cfg.fd_order)  # type: ignore[arg-type]
    return np.asarray(covector).reshape(grid.shape) / grid.weight


def total_derivative(
    lagrangian: "LagrangianSpec",
    u: GridFunction,
    e: GridFunction,
    f: GridFunction,
    g: GridFunction,
    cfg: DiffConfig = DEFAULT_DIFF,
) -> float:
    """dL(u, e)(f, g) = D₁L(u,e)(f) + D₂L(u,e)(g)."""
    return partial_derivative(lagrangian, u, e, f, 1, cfg) + partial_derivative(
        lagrangian, u, e, g, 2, cfg
    )


def curve_densities(
    lagrangian: "LagrangianSpec",
    grid: PeriodicGrid,
    positions: np.ndarray,
    velocities: np.ndarray,
    slot: int,
    cfg: DiffConfig = DEFAULT_DIFF,
) -> np.ndarray:
    """Gradient densities at every sample of a lifted curve, shape (M+1, n, m)."""
    _check_slot(slot)
    if cfg.backend == "analytic":
        _require_analytic(lagrangian)
        return np.asarray(lagrangian.density(grid, positions, velocities, slot))
    return np.stack(
        [
            _directional_density(lagrangian, grid, position, velocity, slot, cfg)
            for position, velocity in zip(positions, velocities)
        ]
    )


def energy(
    lagrangian: "LagrangianSpec",
    u: GridFunction,
    e: GridFunction,
    cfg: DiffConfig = DEFAULT_DIFF,
) -> float:
    """E(u, e) = D₂L(u, e)(e) − L(u, e), conserved along autonomous motions."""
    grid = _check_grids(u, e)
    momentum = gradient_density(lagrangian, u, e, 2, cfg)
    return pair(momentum, e) - lagrangian.checked_value(grid, u.values, e.values)


def energy_series(
    lagrangian: "LagrangianSpec",
    grid: PeriodicGrid,
    positions: np.ndarray,
    velocities: np.ndarray,
    cfg: DiffConfig = DEFAULT_DIFF,
) -> np.ndarray:
    """Energy at every sample of a curve given positions and velocities."""
    momenta = curve_densities(lagrangian, grid, positions, velocities, 2, cfg)
    kinetic_pairing = grid.weight * np.sum(momenta * velocities, axis=(-2, -1))
    return kinetic_pairing - np.asarray(lagrangian.value(grid, positions, velocities))
