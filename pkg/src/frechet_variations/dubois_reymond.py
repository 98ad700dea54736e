"""Test variations and the DuBois-Reymond constancy test.

For dual curves f, g on [a, b] the weak-form condition

    ∫ f(t)(μ(t)) + g(t)(μ′(t)) dt = 0   for all compactly supported μ

holds exactly when h(t) = g(t) − ∫_a^t f(s) ds is constant. This module builds
compactly supported variations μ(t) = φ(t)·y, evaluates the weak-form
residual and measures how far h is from being constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import DimensionError, PreconditionError, SupportViolationError
from .function_space import DualDensity, GridFunction, PeriodicGrid, sup_norm
from .logging_utils import get_logger
from .stencils import zero_extended_time_derivative
from .weak_integral import (
    DEFAULT_QUADRATURE,
    DualCurve,
    PrimalCurve,
    Quadrature,
    TimeGrid,
    cumulative_samples,
)

logger = get_logger(__name__)

BUMP_SHAPES = ("smooth", "polynomial", "cumulative")

# Fraction of [a, b] covered by the window of a separating variation.
SEPARATING_WINDOW = 0.9

# Trapezoid weights are uniform on the support of every variation, so discrete
# summation by parts against the centered μ′ stencil is exact.
VARIATION_QUADRATURE = Quadrature("trapezoid")


def minimum_margin(time: TimeGrid) -> float:
    """Smallest endpoint margin keeping the zero-extended μ′ stencil inside [a, b]."""
    return 2.0 * time.dt


@dataclass(frozen=True, eq=False)
class BumpProfile:
    """A scalar C¹ profile φ vanishing outside [center − width/2, center + width/2].

    ``smooth`` is exp(−1/(1−s²)) and ``polynomial`` is (1−s²)³ in the scaled
    variable s = (t − center)/(width/2). A ``cumulative`` profile is tabulated
    at time nodes, together with its derivative, by :func:`separating_variation`.
    """

    center: float
    width: float
    shape: str = "smooth"
    amplitude: float = 1.0
    table: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(
        default=None, repr=False
    )

    def __post_init__(self) -> None:
        if self.shape not in BUMP_SHAPES:
            raise PreconditionError(
                f"bump shape must be one of {BUMP_SHAPES}, got {self.shape!r}"
            )
        if not (math.isfinite(self.width) and self.width > 0.0):
            raise PreconditionError(f"bump width must be positive, got {self.width}")
        if self.shape == "cumulative" and self.table is None:
            raise PreconditionError("a cumulative profile needs its tabulated values")

    @classmethod
    def tabulated(
        cls, time: TimeGrid, values: np.ndarray, derivatives: np.ndarray
    ) -> "BumpProfile":
        nonzero = np.flatnonzero(np.abs(values) + np.abs(derivatives))
        nodes = time.nodes
        if nonzero.size:
            lo, hi = nodes[nonzero[0]], nodes[nonzero[-1]]
        else:
            lo = hi = 0.5 * (time.a + time.b)
        width = max(hi - lo, time.dt)
        return cls(
            0.5 * (lo + hi),
            width,
            "cumulative",
            table=(nodes, np.asarray(values, float), np.asarray(derivatives, float)),
        )

    @property
    def support(self) -> Tuple[float, float]:
        half = 0.5 * self.width
        return self.center - half, self.center + half

    @property
    def is_zero(self) -> bool:
        if self.table is not None:
            return not np.any(self.table[1])
        return self.amplitude == 0.0

    def _scaled(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        s = (np.asarray(t, dtype=float) - self.center) / (0.5 * self.width)
        return s, np.abs(s) < 1.0

    def __call__(self, t: np.ndarray) -> np.ndarray:
        if self.table is not None:
            nodes, values, _ = self.table
            return np.interp(t, nodes, values, left=0.0, right=0.0)
        s, inside = self._scaled(t)
        out = np.zeros_like(s)
        q = 1.0 - s[inside] ** 2
        if self.shape == "smooth":
            out[inside] = np.exp(-1.0 / q)
        else:
            out[inside] = q**3
        return self.amplitude * out

    def derivative(self, t: np.ndarray) -> np.ndarray:
        if self.table is not None:
            nodes, _, derivatives = self.table
            return np.interp(t, nodes, derivatives, left=0.0, right=0.0)
        s, inside = self._scaled(t)
        out = np.zeros_like(s)
        si = s[inside]
        q = 1.0 - si**2
        if self.shape == "smooth":
            out[inside] = np.exp(-1.0 / q) * (-2.0 * si / q**2)
        else:
            out[inside] = -6.0 * si * q**2
        return self.amplitude * out / (0.5 * self.width)


@dataclass(frozen=True, eq=False)
class VariationField:
    """A variation μ: [a, b] → E vanishing within ``margin`` of both ends.

    When ``derivative`` is omitted, μ′ is the centered order-4 time difference
    of the samples extended by zero beyond the interval.
    """

    time: TimeGrid
    grid: PeriodicGrid
    samples: np.ndarray = field(repr=False)
    derivative: Optional[np.ndarray] = field(default=None, repr=False)
    margin: Optional[float] = None

    def __post_init__(self) -> None:
        expected = (self.time.M + 1,) + self.grid.shape
        samples = np.array(self.samples, dtype=float)
        if samples.ndim == 2 and self.grid.m == 1:
            samples = samples.reshape(expected)
        if samples.shape != expected:
            raise DimensionError(f"variation samples must have shape {expected}, got {samples.shape}")
        if self.derivative is None:
            derivative = zero_extended_time_derivative(samples, self.time.dt)
        else:
            derivative = np.array(self.derivative, dtype=float).reshape(expected)
        if not (np.all(np.isfinite(samples)) and np.all(np.isfinite(derivative))):
            raise PreconditionError("variation contains non-finite entries")
        margin = minimum_margin(self.time) if self.margin is None else float(self.margin)
        if margin < minimum_margin(self.time) * (1.0 - 1e-9):
            raise SupportViolationError(
                f"support margin {margin:.6g} is below two time steps "
                f"({minimum_margin(self.time):.6g})"
            )
        samples.setflags(write=False)
        derivative.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "derivative", derivative)
        object.__setattr__(self, "margin", margin)
        self.check_support()

    @classmethod
    def zeros(cls, time: TimeGrid, grid: PeriodicGrid) -> "VariationField":
        return cls(time, grid, np.zeros((time.M + 1,) + grid.shape))

    @property
    def margin_nodes(self) -> int:
        """Number of nodes after ``a`` (and before ``b``) that must vanish."""
        assert self.margin is not None
        return int(math.floor(self.margin / self.time.dt + 1e-9))

    def check_support(self) -> None:
        k = self.margin_nodes
        head = self.samples[: k + 1]
        tail = self.samples[self.time.M - k :]
        if np.any(head != 0.0) or np.any(tail != 0.0):
            raise SupportViolationError(
                f"variation does not vanish within {self.margin:.6g} of the endpoints "
                f"[{self.time.a:.6g}, {self.time.b:.6g}]"
            )

    def __getitem__(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.samples[j])

    def derivative_at(self, j: int) -> GridFunction:
        assert self.derivative is not None
        return GridFunction(self.grid, self.derivative[j])

    def __mul__(self, scalar: float) -> "VariationField":
        assert self.derivative is not None
        return VariationField(
            self.time,
            self.grid,
            float(scalar) * self.samples,
            float(scalar) * self.derivative,
            self.margin,
        )

    __rmul__ = __mul__

    def __add__(self, other: "VariationField") -> "VariationField":
        if not isinstance(other, VariationField):
            return NotImplemented
        if other.time != self.time or other.grid != self.grid:
            raise DimensionError("variations live on different time or space grids")
        assert self.derivative is not None and other.derivative is not None
        return VariationField(
            self.time,
            self.grid,
            self.samples + other.samples,
            self.derivative + other.derivative,
            min(self.margin or 0.0, other.margin or 0.0),
        )

    def as_primal(self) -> PrimalCurve:
        return PrimalCurve(self.time, self.grid, self.samples)


def make_test_variation(
    y: GridFunction,
    profile: BumpProfile,
    time: TimeGrid,
    margin: Optional[float] = None,
) -> VariationField:
    """μ(t) = φ(t)·y, checked to vanish near both endpoints."""
    margin = minimum_margin(time) if margin is None else float(margin)
    if not profile.is_zero:
        lo, hi = profile.support
        if lo < time.a + margin - 1e-12 * time.length or hi > time.b - margin + 1e-12 * time.length:
            raise SupportViolationError(
                f"profile support [{lo:.6g}, {hi:.6g}] is not inside "
                f"[{time.a + margin:.6g}, {time.b - margin:.6g}]"
            )
    phi = profile(time.nodes)
    if profile.shape == "cumulative":
        derivative = profile.derivative(time.nodes)[:, None, None] * y.values[None]
    else:
        derivative = None
    samples = phi[:, None, None] * y.values[None]
    return VariationField(time, y.grid, samples, derivative, margin)


def random_test_variations(
    time: TimeGrid,
    grid: PeriodicGrid,
    count: int,
    rng: np.random.Generator,
) -> List[VariationField]:
    """Smooth bumps with random centres, widths and Gaussian directions."""
    margin = minimum_margin(time)
    room = time.length - 2.0 * margin
    if room <= 0.0:
        raise PreconditionError(f"time grid with M={time.M} leaves no room for a bump")
    variations = []
    for _ in range(count):
        width = rng.uniform(0.25, 1.0) * room
        lo = time.a + margin + 0.5 * width
        center = rng.uniform(lo, lo + room - width)
        y = GridFunction(grid, rng.standard_normal(grid.shape))
        variations.append(make_test_variation(y, BumpProfile(center, width), time, margin))
    return variations


def _check_curves(*curves: object) -> Tuple[TimeGrid, PeriodicGrid]:
    first = curves[0]
    for other in curves[1:]:
        if other.time != first.time or other.grid != first.grid:  # type: ignore[attr-defined]
            raise DimensionError("curves live on different time or space grids")
    return first.time, first.grid  # type: ignore[attr-defined]


def weak_form_residual(
    f: DualCurve,
    g: DualCurve,
    variation: VariationField,
    quadrature: Quadrature = VARIATION_QUADRATURE,
) -> float:
    """∫ f(t)(μ(t)) + g(t)(μ′(t)) dt by the given quadrature."""
    time, grid = _check_curves(f, g, variation)
    integrand = grid.weight * (
        np.sum(f.samples * variation.samples, axis=(-2, -1))
        + np.sum(g.samples * variation.derivative, axis=(-2, -1))
    )
    return float(np.dot(quadrature.weights(time), integrand))


def derivative_weak_residual(
    f: DualCurve,
    variation: VariationField,
    quadrature: Quadrature = VARIATION_QUADRATURE,
) -> float:
    """∫ f(t)(μ′(t)) dt; zero for every μ exactly when f is constant."""
    time, grid = _check_curves(f, variation)
    integrand = grid.weight * np.sum(f.samples * variation.derivative, axis=(-2, -1))
    return float(np.dot(quadrature.weights(time), integrand))


def _h_samples(f: DualCurve, g: DualCurve) -> np.ndarray:
    _check_curves(f, g)
    return g.samples - cumulative_samples(f.samples, f.time.dt)


@dataclass(frozen=True, eq=False)
class DBRReport:
    """h(t) = g(t) − ∫_a^t f, its time average and the deviation per node."""

    times: np.ndarray = field(repr=False)
    h: DualCurve = field(repr=False)
    average: DualDensity = field(repr=False)
    deviations: np.ndarray = field(repr=False)
    defect: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "deviation": self.deviations})


def dbr_report(
    f: DualCurve, g: DualCurve, quadrature: Quadrature = DEFAULT_QUADRATURE
) -> DBRReport:
    h = _h_samples(f, g)
    weights = quadrature.weights(f.time)
    average = np.tensordot(weights, h, axes=(0, 0)) / f.time.length
    deviations = np.max(np.abs(h - average[None]), axis=(-2, -1))
    defect = float(np.max(deviations))
    logger.debug("dbr defect %.3e over %d nodes", defect, len(deviations))
    return DBRReport(
        f.time.nodes,
        DualCurve(f.time, f.grid, h),
        DualDensity(f.grid, average),
        deviations,
        defect,
    )


def dbr_defect(
    f: DualCurve, g: DualCurve, quadrature: Quadrature = DEFAULT_QUADRATURE
) -> float:
    """max_j p₀(h(t_j) − h̄) with h̄ the quadrature mean of h."""
    return dbr_report(f, g, quadrature).defect


def default_window(time: TimeGrid) -> BumpProfile:
    """Smooth window centred in [a, b] covering most of the interval."""
    width = min(SEPARATING_WINDOW * time.length, time.length - 6.0 * time.dt)
    if width <= 0.0:
        raise PreconditionError(f"time grid with M={time.M} is too coarse for a window")
    return BumpProfile(0.5 * (time.a + time.b), width, "smooth")


def separating_variation(
    f: DualCurve,
    g: DualCurve,
    window: Optional[BumpProfile] = None,
    quadrature: Quadrature = DEFAULT_QUADRATURE,
) -> VariationField:
    """A variation whose weak-form residual is positive when h is not constant.

    With y the direction in which h deviates most from its mean and
    s(t) = h(t)(y), the profile is φ(t) = ∫_a^t (s − c̄)β / S where β is a
    window, c̄ the β-weighted mean of s and S the peak of |(s − c̄)β|. Then φ
    vanishes near both ends and the residual is ∫ (s − c̄)²β / S ≥ 0.
    """
    time, grid = _check_curves(f, g)
    report = dbr_report(f, g, quadrature)
    if report.defect == 0.0:
        raise PreconditionError("h is constant; no variation separates it")
    worst = int(np.argmax(report.deviations))
    deviation = report.h.samples[worst] - report.average.density
    y = GridFunction(grid, deviation / sup_norm(deviation))

    beta_window = window if window is not None else default_window(time)
    beta = beta_window(time.nodes)
    s = grid.weight * np.sum(report.h.samples * y.values[None], axis=(-2, -1))
    weights = quadrature.weights(time)
    c_bar = float(np.dot(weights, s * beta) / np.dot(weights, beta))
    psi = (s - c_bar) * beta
    scale = float(np.max(np.abs(psi)))
    if scale == 0.0:
        raise PreconditionError("h does not vary inside the window")
    psi = psi / scale
    phi = cumulative_samples(psi, time.dt)
    lo, hi = beta_window.support
    # the running integral is constant (and zero up to rounding) outside the window
    outside = (time.nodes <= lo) | (time.nodes >= hi)
    phi[outside] = 0.0
    psi[outside] = 0.0
    profile = BumpProfile.tabulated(time, phi, psi)
    margin = min(lo - time.a, time.b - hi)
    return make_test_variation(y, profile, time, max(margin, minimum_margin(time)))
