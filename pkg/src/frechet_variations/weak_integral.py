"""Weak integration of time-sampled curves in E* and in E.

The integral of a dual curve is the functional whose value on every e ∈ E is
the integral of the scalar function t ↦ F(t)(e). Every quadrature rule is
reduced to node weights on the time grid, so the integral is the weighted sum
of the sampled densities and the weak property holds as a finite identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Type, TypeVar

import numpy as np
from scipy.special import roots_legendre

from .errors import ConfigurationError, DimensionError, PreconditionError
from .function_space import DualDensity, GridFunction, PeriodicGrid
from .logging_utils import get_logger

logger = get_logger(__name__)

QUADRATURE_RULES = ("simpson", "gauss-legendre", "trapezoid")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time nodes t_j = a + j·Δt, j = 0..M, on [a, b]."""

    a: float
    b: float
    M: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.b > self.a):
            raise PreconditionError(f"time interval must satisfy a < b, got [{self.a}, {self.b}]")
        if int(self.M) < 1:
            raise PreconditionError(f"M must be at least 1, got {self.M}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "M", int(self.M))

    @property
    def dt(self) -> float:
        return (self.b - self.a) / self.M

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def nodes(self) -> np.ndarray:
        nodes = self.a + self.dt * np.arange(self.M + 1, dtype=float)
        nodes[-1] = self.b
        return nodes

    def sub(self, start: int, stop: int) -> "TimeGrid":
        """The grid on [t_start, t_stop] sharing these nodes."""
        if not 0 <= start < stop <= self.M:
            raise PreconditionError(f"invalid node range {start}..{stop} for M={self.M}")
        nodes = self.nodes
        return TimeGrid(nodes[start], nodes[stop], stop - start)

    def refined(self) -> "TimeGrid":
        return TimeGrid(self.a, self.b, 2 * self.M)


def _simpson_weights(time: TimeGrid) -> np.ndarray:
    if time.M % 2:
        raise ConfigurationError(
            "time.M",
            f"composite Simpson requires an even number of intervals, got {time.M}",
        )
    weights = np.ones(time.M + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return weights * time.dt / 3.0


def _trapezoid_weights(time: TimeGrid) -> np.ndarray:
    weights = np.ones(time.M + 1)
    weights[0] = weights[-1] = 0.5
    return weights * time.dt


def _gauss_legendre_weights(time: TimeGrid, points: int) -> np.ndarray:
    """Per-cell Gauss-Legendre applied to the local cubic interpolant of the samples."""
    if time.M < 3:
        raise ConfigurationError(
            "time.M", f"per-cell Gauss-Legendre needs at least 3 intervals, got {time.M}"
        )
    abscissae, gauss_weights = roots_legendre(points)
    weights = np.zeros(time.M + 1)
    local = np.arange(4, dtype=float)
    for cell in range(time.M):
        start = min(max(cell - 1, 0), time.M - 3)
        # local coordinate of the Gauss points, in units of dt from node `start`
        s = (cell - start) + 0.5 * (abscissae + 1.0)
        for i in range(4):
            others = local[local != i]
            basis = np.prod((s[:, None] - others) / (i - others), axis=1)
            weights[start + i] += 0.5 * time.dt * float(np.dot(gauss_weights, basis))
    return weights


@dataclass(frozen=True)
class Quadrature:
    """Quadrature rule on a uniform time grid, reduced to node weights."""

    rule: str = "simpson"
    points: int = 3

    def __post_init__(self) -> None:
        if self.rule not in QUADRATURE_RULES:
            raise ConfigurationError(
                "quadrature.rule",
                f"unknown rule {self.rule!r}; choose one of {', '.join(QUADRATURE_RULES)}",
            )
        if self.rule == "gauss-legendre" and self.points < 2:
            raise ConfigurationError(
                "quadrature.points", f"Gauss-Legendre needs at least 2 points, got {self.points}"
            )

    def weights(self, time: TimeGrid) -> np.ndarray:
        if self.rule == "simpson":
            return _simpson_weights(time)
        if self.rule == "trapezoid":
            return _trapezoid_weights(time)
        return _gauss_legendre_weights(time, self.points)

    def integrate_samples(self, time: TimeGrid, samples: np.ndarray) -> np.ndarray:
        """Weighted sum over the leading axis of ``samples``."""
        samples = np.asarray(samples, dtype=float)
        if samples.shape[0] != time.M + 1:
            raise DimensionError(
                f"expected {time.M + 1} samples, got {samples.shape[0]}"
            )
        return np.tensordot(self.weights(time), samples, axes=1)


DEFAULT_QUADRATURE = Quadrature()

C = TypeVar("C", bound="SampledCurve")


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """Samples of a curve [a, b] → (grid values) at the nodes of a time grid."""

    time: TimeGrid
    grid: PeriodicGrid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        array = np.array(self.samples, dtype=float)
        expected = (self.time.M + 1,) + self.grid.shape
        if array.ndim == 2 and self.grid.m == 1:
            array = array.reshape(expected)
        if array.shape != expected:
            raise DimensionError(f"samples must have shape {expected}, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise PreconditionError("curve samples contain non-finite entries")
        array.setflags(write=False)
        object.__setattr__(self, "samples", array)

    @classmethod
    def from_function(
        cls: Type[C],
        time: TimeGrid,
        grid: PeriodicGrid,
        fn: Callable[[float], object],
    ) -> C:
        """Sample ``fn(t)`` (an element or a raw (n, m) array) at every time node."""
        rows = []
        for t in time.nodes:
            value = fn(float(t))
            if isinstance(value, GridFunction):
                raw = value.values
            elif isinstance(value, DualDensity):
                raw = value.density
            else:
                raw = np.asarray(value, dtype=float)
                if raw.ndim == 1 and grid.m == 1:
                    raw = raw[:, None]
            rows.append(np.broadcast_to(raw, grid.shape))
        return cls(time, grid, np.stack(rows))

    def __len__(self) -> int:
        return self.time.M + 1

    def _check_compatible(self, other: "SampledCurve") -> None:
        if other.time != self.time or other.grid != self.grid:
            raise DimensionError("curves live on different time or space grids")

    def __add__(self: C, other: C) -> C:
        if not isinstance(other, type(self)):
            return NotImplemented
        self._check_compatible(other)
        return type(self)(self.time, self.grid, self.samples + other.samples)

    def __sub__(self: C, other: C) -> C:
        if not isinstance(other, type(self)):
            return NotImplemented
        self._check_compatible(other)
        return type(self)(self.time, self.grid, self.samples - other.samples)

    def __mul__(self: C, scalar: float) -> C:
        if not isinstance(scalar, (int, float, np.floating, np.integer)):
            return NotImplemented
        return type(self)(self.time, self.grid, float(scalar) * self.samples)

    __rmul__ = __mul__

    def restrict_to(self: C, start: int, stop: int) -> C:
        """The curve on the sub-interval [t_start, t_stop]."""
        return type(self)(
            self.time.sub(start, stop), self.grid, self.samples[start : stop + 1]
        )


class DualCurve(SampledCurve):
    """A curve t ↦ F(t) ∈ E* given by its sampled densities."""

    @classmethod
    def from_samples(cls, time: TimeGrid, samples: Sequence[DualDensity]) -> "DualCurve":
        if len(samples) != time.M + 1:
            raise DimensionError(f"expected {time.M + 1} samples, got {len(samples)}")
        grid = samples[0].grid
        if any(sample.grid != grid for sample in samples):
            raise DimensionError("all samples of a dual curve must share one grid")
        return cls(time, grid, np.stack([sample.density for sample in samples]))

    @classmethod
    def constant(cls, time: TimeGrid, value: DualDensity) -> "DualCurve":
        return cls(time, value.grid, np.repeat(value.density[None], time.M + 1, axis=0))

    def __getitem__(self, j: int) -> DualDensity:
        return DualDensity(self.grid, self.samples[j])


class PrimalCurve(SampledCurve):
    """A curve t ↦ G(t) ∈ E given by its sampled node values."""

    @classmethod
    def from_samples(cls, time: TimeGrid, samples: Sequence[GridFunction]) -> "PrimalCurve":
        if len(samples) != time.M + 1:
            raise DimensionError(f"expected {time.M + 1} samples, got {len(samples)}")
        grid = samples[0].grid
        if any(sample.grid != grid for sample in samples):
            raise DimensionError("all samples of a curve must share one grid")
        return cls(time, grid, np.stack([sample.values for sample in samples]))

    @classmethod
    def constant(cls, time: TimeGrid, value: GridFunction) -> "PrimalCurve":
        return cls(time, value.grid, np.repeat(value.values[None], time.M + 1, axis=0))

    def __getitem__(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.samples[j])


def integrate_dual_curve(
    curve: DualCurve, quadrature: Quadrature = DEFAULT_QUADRATURE
) -> DualDensity:
    """The functional v with v(e) = ∫ F(t)(e) dt for every e (node-weighted sum)."""
    density = quadrature.integrate_samples(curve.time, curve.samples)
    return DualDensity(curve.grid, density)


def integrate_primal_curve(
    curve: PrimalCurve, quadrature: Quadrature = DEFAULT_QUADRATURE
) -> GridFunction:
    """Nodewise quadrature of a curve in E."""
    values = quadrature.integrate_samples(curve.time, curve.samples)
    return GridFunction(curve.grid, values)


def time_average(curve: DualCurve, quadrature: Quadrature = DEFAULT_QUADRATURE) -> DualDensity:
    """Quadrature mean of a dual curve over its interval."""
    total = integrate_dual_curve(curve, quadrature)
    return DualDensity(curve.grid, total.density / curve.time.length)


@dataclass(frozen=True)
class WeakPropertyReport:
    """Outcome of checking v(e) against ∫ F(t)(e) dt."""

    max_relative_discrepancy: float
    discrepancies: Tuple[float, ...]
    trials: int

    def passed(self, tolerance: float = 1e-12) -> bool:
        return self.max_relative_discrepancy <= tolerance


def verify_weak_property(
    curve: DualCurve,
    integral: DualDensity,
    trials: int = 20,
    rng: Optional[np.random.Generator] = None,
    quadrature: Quadrature = DEFAULT_QUADRATURE,
) -> WeakPropertyReport:
    """Compare v(e) with the quadrature of t ↦ F(t)(e) for random trials e.

    Discrepancies are relative to the absolute size of the summed terms, so
    that the check measures the identity rather than cancellation.
    """
    if integral.grid != curve.grid:
        raise DimensionError("integral and curve live on different grids")
    generator = rng if rng is not None else np.random.default_rng(0)
    weights = quadrature.weights(curve.time)
    grid_weight = curve.grid.weight
    discrepancies = []
    for _ in range(trials):
        direction = generator.standard_normal(curve.grid.shape)
        lhs = grid_weight * float(np.sum(integral.density * direction))
        pointwise = curve.samples * direction
        scalar_curve = grid_weight * pointwise.reshape(len(weights), -1).sum(axis=1)
        rhs = float(np.dot(weights, scalar_curve))
        scale = abs(lhs) + grid_weight * float(
            np.dot(np.abs(weights), np.abs(pointwise).reshape(len(weights), -1).sum(axis=1))
        )
        difference = abs(lhs - rhs)
        if difference == 0.0:
            discrepancies.append(0.0)
        else:
            discrepancies.append(difference / scale)
    worst = max(discrepancies, default=0.0)
    logger.debug("weak property: %d trials, max relative discrepancy %.3e", trials, worst)
    return WeakPropertyReport(worst, tuple(discrepancies), trials)


def cumulative_samples(samples: np.ndarray, dt: float) -> np.ndarray:
    """Running integral of node samples along axis 0, starting from zero.

    Even nodes accumulate Simpson panels over pairs of cells; odd nodes add the
    three-point rule over their own cell to the preceding even node.
    """
    f = np.asarray(samples, dtype=float)
    M = f.shape[0] - 1
    if M < 2:
        raise PreconditionError(f"cumulative integral needs M >= 2, got {M}")
    out = np.zeros_like(f)
    K = M // 2
    panels = dt / 3.0 * (f[0 : 2 * K : 2] + 4.0 * f[1 : 2 * K : 2] + f[2 : 2 * K + 1 : 2])
    out[2 : 2 * K + 1 : 2] = np.cumsum(panels, axis=0)
    out[1 : 2 * K : 2] = out[0 : 2 * K : 2] + dt / 12.0 * (
        5.0 * f[0 : 2 * K : 2] + 8.0 * f[1 : 2 * K : 2] - f[2 : 2 * K + 1 : 2]
    )
    if M % 2:
        out[M] = out[M - 1] + dt / 12.0 * (-f[M - 2] + 8.0 * f[M - 1] + 5.0 * f[M])
    return out


def cumulative_integral(curve: DualCurve) -> DualCurve:
    """Running integral t_j ↦ ∫_a^{t_j} F, exact for quadratics."""
    return DualCurve(curve.time, curve.grid, cumulative_samples(curve.samples, curve.time.dt))
