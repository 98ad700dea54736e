"""Discretized model of the Fréchet space E = C^∞(S¹, ℝᵐ) and its dual.

Elements of E are node values on a uniform periodic grid. Elements of E* are
represented by densities acting through the periodic trapezoid pairing
``l(u) = (2π/N) Σᵢ ρᵢ·uᵢ``. The seminorm family is the sup-norm of discrete
derivatives up to a given order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np

from .errors import (
    DimensionError,
    PreconditionError,
    UnsupportedOrderError,
)
from .stencils import periodic_derivative, stencil_width

TWO_PI = 2.0 * math.pi

# Smallest node count accepted for configured runs; the point model N = 1
# is reserved for the finite-dimensional reduction.
MIN_GRID_NODES = 8

Scalar = Union[int, float]


def is_power_of_two(value: int) -> bool:
    """Return ``True`` if ``value`` is a positive power of two (1 included)."""
    return value >= 1 and value & (value - 1) == 0


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid of ``n`` nodes on the circle of length ``period``."""

    n: int
    m: int = 1
    period: float = TWO_PI

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or not is_power_of_two(
            int(self.n)
        ):
            raise PreconditionError(f"N must be a power of two, got {self.n}")
        if 1 < self.n < MIN_GRID_NODES:
            raise PreconditionError(
                f"N must be 1 (the point model) or at least {MIN_GRID_NODES}, got {self.n}"
            )
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise PreconditionError(f"m must be a positive integer, got {self.m}")
        if not (math.isfinite(self.period) and self.period > 0.0):
            raise PreconditionError(f"period must be positive, got {self.period}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "period", float(self.period))

    @property
    def spacing(self) -> float:
        return self.period / self.n

    @property
    def weight(self) -> float:
        """Pairing weight of the periodic trapezoid rule."""
        return self.period / self.n

    @property
    def nodes(self) -> np.ndarray:
        return self.spacing * np.arange(self.n, dtype=float)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n, self.m)

    @property
    def is_point(self) -> bool:
        """The single-node grid models E ≅ ℝᵐ with no spatial structure."""
        return self.n == 1

    def refined(self) -> "PeriodicGrid":
        if self.is_point:
            raise PreconditionError("the point model has no refinement")
        return PeriodicGrid(2 * self.n, self.m, self.period)

    def coarsened(self) -> "PeriodicGrid":
        if self.n < 2 * MIN_GRID_NODES:
            raise PreconditionError(
                f"cannot coarsen N={self.n} below {MIN_GRID_NODES} nodes"
            )
        return PeriodicGrid(self.n // 2, self.m, self.period)


def _as_values(grid: PeriodicGrid, raw: object, label: str) -> np.ndarray:
    array = np.array(raw, dtype=float)
    if array.ndim == 0:
        array = np.full(grid.shape, float(array))
    elif array.ndim == 1 and grid.m == 1 and array.shape[0] == grid.n:
        array = array.reshape(grid.shape)
    if array.shape != grid.shape:
        raise DimensionError(
            f"{label} must have shape {grid.shape}, got {array.shape}"
        )
    if not np.all(np.isfinite(array)):
        raise PreconditionError(f"{label} contains non-finite entries")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GridFunction:
    """An element of E: ``m``-vector values at the ``n`` grid nodes."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _as_values(self.grid, self.values, "values"))

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: Scalar) -> "GridFunction":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def sample(
        cls, grid: PeriodicGrid, fn: Callable[[np.ndarray], object]
    ) -> "GridFunction":
        """Sample ``fn`` at the grid nodes; ``fn`` maps x to (n,) or (n, m)."""
        raw = np.asarray(fn(grid.nodes), dtype=float)
        if raw.ndim == 1 and grid.m > 1:
            raw = np.repeat(raw[:, None], grid.m, axis=1)
        return cls(grid, raw)

    def _checked(self, other: "GridFunction") -> np.ndarray:
        if other.grid != self.grid:
            raise DimensionError(f"grid mismatch: {self.grid} vs {other.grid}")
        return other.values

    def __add__(self, other: "GridFunction") -> "GridFunction":
        if not isinstance(other, GridFunction):
            return NotImplemented
        return GridFunction(self.grid, self.values + self._checked(other))

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        if not isinstance(other, GridFunction):
            return NotImplemented
        return GridFunction(self.grid, self.values - self._checked(other))

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def __mul__(self, scalar: Scalar) -> "GridFunction":
        if not isinstance(scalar, (int, float, np.floating, np.integer)):
            return NotImplemented
        return GridFunction(self.grid, float(scalar) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Scalar) -> "GridFunction":
        return GridFunction(self.grid, self.values / float(scalar))

    def derivative(self, order: int = 1, stencil_order: int = 4) -> "GridFunction":
        return discrete_derivative(self, order, stencil_order)

    def __repr__(self) -> str:
        return f"GridFunction(n={self.grid.n}, m={self.grid.m})"


@dataclass(frozen=True, eq=False)
class DualDensity:
    """An element of E* represented by its density ``ρ``."""

    grid: PeriodicGrid
    density: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "density", _as_values(self.grid, self.density, "density")
        )

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "DualDensity":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_grid_function(cls, u: GridFunction) -> "DualDensity":
        """The functional ``f ↦ ⟨u, f⟩`` (Riesz representative)."""
        return cls(u.grid, u.values)

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.grid, self.density)

    def covector(self) -> np.ndarray:
        """Coefficients of the functional in the nodal coordinate basis."""
        return self.grid.weight * self.density

    def __call__(self, u: GridFunction) -> float:
        return pair(self, u)

    def _other_density(self, other: "DualDensity") -> np.ndarray:
        if other.grid != self.grid:
            raise DimensionError(f"grid mismatch: {self.grid} vs {other.grid}")
        return other.density

    def __add__(self, other: "DualDensity") -> "DualDensity":
        if not isinstance(other, DualDensity):
            return NotImplemented
        return DualDensity(self.grid, self.density + self._other_density(other))

    def __sub__(self, other: "DualDensity") -> "DualDensity":
        if not isinstance(other, DualDensity):
            return NotImplemented
        return DualDensity(self.grid, self.density - self._other_density(other))

    def __neg__(self) -> "DualDensity":
        return DualDensity(self.grid, -self.density)

    def __mul__(self, scalar: Scalar) -> "DualDensity":
        if not isinstance(scalar, (int, float, np.floating, np.integer)):
            return NotImplemented
        return DualDensity(self.grid, float(scalar) * self.density)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"DualDensity(n={self.grid.n}, m={self.grid.m})"


@dataclass(frozen=True)
class SeminormFamily:
    """The family p_k(u) = max_{j ≤ k} max_i |Dʲu(xᵢ)|, 0 ≤ k ≤ k_max."""

    k_max: int = 4
    stencil_order: int = 4

    def __post_init__(self) -> None:
        if self.k_max < 0:
            raise PreconditionError(f"k_max must be non-negative, got {self.k_max}")

    def __call__(self, u: GridFunction, k: int) -> float:
        if k < 0 or k > self.k_max:
            raise UnsupportedOrderError(
                f"seminorm order {k} outside supported range 0..{self.k_max}"
            )
        best = 0.0
        current = u
        for j in range(k + 1):
            if j > 0:
                current = discrete_derivative(current, 1, self.stencil_order)
            best = max(best, float(np.max(np.abs(current.values))))
        return best


DEFAULT_SEMINORMS = SeminormFamily()


def discrete_derivative(u: GridFunction, j: int, stencil_order: int = 4) -> GridFunction:
    """Apply the centered periodic first-derivative stencil ``j`` times."""
    if j < 0:
        raise PreconditionError(f"derivative order must be non-negative, got {j}")
    if j == 0:
        return u
    if u.grid.is_point:
        return GridFunction.zeros(u.grid)
    width = stencil_width(stencil_order)
    if u.grid.n < width:
        raise PreconditionError(
            f"stencil of width {width} is wider than a grid of {u.grid.n} nodes"
        )
    values = u.values
    for _ in range(j):
        values = periodic_derivative(values, u.grid.spacing, stencil_order, axis=-2)
    return GridFunction(u.grid, values)


def seminorm(
    u: GridFunction, k: int, family: SeminormFamily = DEFAULT_SEMINORMS
) -> float:
    """Return p_k(u) for the given seminorm family."""
    return family(u, k)


def sup_norm(values: np.ndarray) -> float:
    """p₀ of raw node values (a GridFunction or a density)."""
    return float(np.max(np.abs(values))) if np.size(values) else 0.0


def pair(functional: DualDensity, u: GridFunction) -> float:
    """Evaluate ``functional`` at ``u`` with the periodic trapezoid weight."""
    if functional.grid != u.grid:
        raise DimensionError(f"grid mismatch: {functional.grid} vs {u.grid}")
    return functional.grid.weight * float(np.sum(functional.density * u.values))


def refine(u: GridFunction) -> GridFunction:
    """Resample ``u`` on the grid with twice as many nodes.

    Even nodes keep their values; odd nodes use the centered four-point cubic
    interpolant ``(-u[i-1] + 9u[i] + 9u[i+1] - u[i+2]) / 16``.
    """
    grid = u.grid
    fine = grid.refined()
    values = np.empty(fine.shape)
    values[0::2] = u.values
    v = u.values
    values[1::2] = (
        -np.roll(v, 1, axis=0)
        + 9.0 * v
        + 9.0 * np.roll(v, -1, axis=0)
        - np.roll(v, -2, axis=0)
    ) / 16.0
    return GridFunction(fine, values)


def restrict(u: GridFunction) -> GridFunction:
    """Keep the even nodes, the inverse of :func:`refine` on nested nodes."""
    coarse = u.grid.coarsened()
    return GridFunction(coarse, u.values[0::2])


def coordinate_evaluation(grid: PeriodicGrid, node: int, component: int = 0) -> DualDensity:
    """The functional ``u ↦ u[node][component]``."""
    if not (0 <= node < grid.n and 0 <= component < grid.m):
        raise PreconditionError(
            f"coordinate ({node}, {component}) outside grid shape {grid.shape}"
        )
    density = np.zeros(grid.shape)
    density[node, component] = 1.0 / grid.weight
    return DualDensity(grid, density)


def separating_functional(u: GridFunction, v: GridFunction) -> DualDensity:
    """Return a coordinate evaluation that distinguishes ``u`` from ``v``."""
    if u.grid != v.grid:
        raise DimensionError(f"grid mismatch: {u.grid} vs {v.grid}")
    difference = np.abs(u.values - v.values)
    if not np.any(difference > 0.0):
        raise PreconditionError("u and v coincide; no functional separates them")
    node, component = np.unravel_index(int(np.argmax(difference)), difference.shape)
    return coordinate_evaluation(u.grid, int(node), int(component))
