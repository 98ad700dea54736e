"""Euler-Lagrange residuals, critical-curve checks and the two solvers.

A curve u is critical for L when D₁L(u, u′) − d/dt D₂L(u, u′) = 0. The residual
is assembled from gradient densities along the lifted curve. Initial-value
problems are integrated with the leapfrog (Störmer-Verlet) scheme; boundary
value problems are solved by Newton-Krylov iteration on the collocated
residual at the interior nodes.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import sympy as sp
from scipy.linalg import solveh_banded
from scipy.optimize import NoConvergence, newton_krylov
from scipy.sparse.linalg import LinearOperator

from .calculus import DEFAULT_DIFF, DiffConfig, curve_densities, energy_series
from .dubois_reymond import (
    VARIATION_QUADRATURE,
    BumpProfile,
    VariationField,
    make_test_variation,
    minimum_margin,
)
from .errors import (
    ConfigurationError,
    DimensionError,
    DivergenceError,
    InsufficientDataError,
    PreconditionError,
    UnsupportedFormError,
)
from .expressions import FieldExpression, to_sympy
from .function_space import GridFunction, PeriodicGrid, sup_norm
from .lagrangian import MODE_ALIASES, CurveInE, LagrangianSpec, first_variation
from .logging_utils import get_logger
from .stencils import interior_slice, time_derivative
from .weak_integral import Quadrature, TimeGrid

logger = get_logger(__name__)

RESIDUAL_ORDER = 4
MIN_RESIDUAL_NODES = 8
ERROR_FLOOR = 1e-12
VERIFY_MODES = ("direct", "eq6")


@dataclass(frozen=True, eq=False)
class ELResidual:
    """R(t_j) = ρ₁(t_j) − d/dt ρ₂(t_j) at the interior time nodes."""

    time: TimeGrid
    grid: PeriodicGrid
    indices: np.ndarray = field(repr=False)
    densities: np.ndarray = field(repr=False)
    node_norms: np.ndarray = field(repr=False)
    max_norm: float
    l2_norm: float

    @property
    def times(self) -> np.ndarray:
        return self.time.nodes[self.indices]

    def __len__(self) -> int:
        return len(self.indices)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "residual": self.node_norms})


def el_residual(
    lagrangian: LagrangianSpec, curve: CurveInE, cfg: DiffConfig = DEFAULT_DIFF
) -> ELResidual:
    """Euler-Lagrange residual of a lifted curve.

    The time derivative of ρ₂ uses the order-4 stencil; nodes where that
    stencil would reach a one-sided lift value are left out, which keeps
    nodes 4..M−4.
    """
    M = curve.time.M
    if M < MIN_RESIDUAL_NODES:
        raise PreconditionError(f"residual needs M >= {MIN_RESIDUAL_NODES}, got {M}")
    grid = curve.grid
    rho1 = curve_densities(lagrangian, grid, curve.samples, curve.velocities, 1, cfg)
    rho2 = curve_densities(lagrangian, grid, curve.samples, curve.velocities, 2, cfg)
    momentum_rate = time_derivative(rho2, curve.time.dt, RESIDUAL_ORDER)
    window = interior_slice(M + 1, RESIDUAL_ORDER)
    residual = (rho1 - momentum_rate)[window]
    node_norms = np.max(np.abs(residual), axis=(-2, -1))
    l2 = math.sqrt(curve.time.dt * grid.weight * float(np.sum(residual * residual)))
    indices = np.arange(M + 1)[window]
    return ELResidual(
        curve.time,
        grid,
        indices,
        residual,
        node_norms,
        float(np.max(node_norms)),
        l2,
    )


@dataclass(frozen=True, eq=False)
class CriticalityReport:
    """Normalized first variations over a family of test variations."""

    labels: Tuple[str, ...]
    values: np.ndarray = field(repr=False)
    normalized: np.ndarray = field(repr=False)
    tolerance: float
    mode: str

    @property
    def max_normalized(self) -> float:
        return float(np.max(self.normalized)) if self.normalized.size else 0.0

    @property
    def passed(self) -> bool:
        return self.max_normalized <= self.tolerance

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "variation": list(self.labels),
                "first_variation": self.values,
                "normalized": self.normalized,
            }
        )


def _embed(grid: PeriodicGrid, component: int, column: np.ndarray) -> np.ndarray:
    values = np.zeros(grid.shape)
    values[:, component] = column
    return values


def _direction_modes(grid: PeriodicGrid) -> List[Tuple[str, np.ndarray]]:
    modes: List[Tuple[str, np.ndarray]] = []
    x = grid.nodes
    max_frequency = 0 if grid.is_point else min(3, grid.n // 2 - 1)
    coordinate_nodes = [] if grid.is_point else sorted({0, grid.n // 4, grid.n // 2, 3 * grid.n // 4})
    for k in range(grid.m):
        modes.append((f"const[{k}]", _embed(grid, k, np.ones(grid.n))))
        for q in range(1, max_frequency + 1):
            modes.append((f"cos{q}x[{k}]", _embed(grid, k, np.cos(q * x))))
            modes.append((f"sin{q}x[{k}]", _embed(grid, k, np.sin(q * x))))
        for i in coordinate_nodes:
            modes.append((f"node{i}[{k}]", _embed(grid, k, np.eye(grid.n)[i])))
    return modes


def variation_family(
    time: TimeGrid, grid: PeriodicGrid, count: int
) -> List[Tuple[str, VariationField]]:
    """``count`` bump variations spanning centres × direction modes."""
    if count < 1:
        raise PreconditionError(f"variation family size must be positive, got {count}")
    directions = _direction_modes(grid)
    n_centers = max(1, math.ceil(count / len(directions)))
    margin = minimum_margin(time)
    width = min(0.5 * time.length, time.length - 2.0 * margin)
    if width <= 0.0:
        raise PreconditionError(f"time grid with M={time.M} leaves no room for a bump")
    first = time.a + margin + 0.5 * width
    last = time.b - margin - 0.5 * width
    centers = np.linspace(first, last, n_centers) if n_centers > 1 else [0.5 * (first + last)]
    family: List[Tuple[str, VariationField]] = []
    for center, (label, values) in product(centers, directions):
        if len(family) == count:
            break
        profile = BumpProfile(float(center), width, "smooth")
        y = GridFunction(grid, values)
        family.append((f"{label}@t={center:.6g}", make_test_variation(y, profile, time, margin)))
    return family


def verify_critical(
    lagrangian: LagrangianSpec,
    curve: CurveInE,
    count: int = 50,
    tolerance: float = 1e-7,
    mode: str = "direct",
    cfg: DiffConfig = DEFAULT_DIFF,
    quadrature: Quadrature = VARIATION_QUADRATURE,
) -> CriticalityReport:
    """Check T_c F(A) ≈ 0 over a family of compactly supported variations.

    Each first variation is normalized by p₀(μ) + p₀(μ′). ``direct``
    differentiates the action of the lifted curve along each variation and
    ``eq6`` (alias ``pairing``) integrates the gradient densities against
    (μ, μ′).
    """
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in VERIFY_MODES:
        raise PreconditionError(f"mode must be one of {VERIFY_MODES}, got {mode!r}")
    family = variation_family(curve.time, curve.grid, count)
    labels: List[str] = []
    values: List[float] = []
    normalized: List[float] = []
    for label, variation in family:
        value = first_variation(lagrangian, curve, variation, mode, cfg, quadrature)
        scale = sup_norm(variation.samples) + sup_norm(variation.derivative)
        labels.append(label)
        values.append(value)
        normalized.append(abs(value) / scale if scale > 0.0 else 0.0)
    report = CriticalityReport(
        tuple(labels), np.array(values), np.array(normalized), tolerance, mode
    )
    logger.info(
        "verify-critical: %d variations, max normalized %.3e (tol %.1e) -> %s",
        len(family),
        report.max_normalized,
        tolerance,
        "pass" if report.passed else "fail",
    )
    return report


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Result of a solver run."""

    solution: CurveInE
    method: str
    iterations: int
    converged: bool
    residual: Optional[ELResidual] = None
    energy: Optional[np.ndarray] = field(default=None, repr=False)
    collocation_norm: Optional[float] = None

    def summary(self) -> Dict[str, object]:
        values: Dict[str, object] = {
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
        }
        if self.residual is not None:
            values["residual_max"] = self.residual.max_norm
            values["residual_l2"] = self.residual.l2_norm
        if self.collocation_norm is not None:
            values["collocation_norm"] = self.collocation_norm
        if self.energy is not None:
            drift = energy_drift(self.solution.time.nodes, self.energy)
            values["energy_amplitude"] = drift.amplitude
            values["energy_slope"] = drift.slope
        return values

    def to_frame(self) -> pd.DataFrame:
        curve = self.solution
        frame = pd.DataFrame(
            {
                "t": curve.time.nodes,
                "p0_u": np.max(np.abs(curve.samples), axis=(-2, -1)),
                "p0_velocity": np.max(np.abs(curve.velocities), axis=(-2, -1)),
            }
        )
        if self.energy is not None:
            frame["energy"] = self.energy
        return frame


def _check_endpoint_grids(*functions: GridFunction) -> PeriodicGrid:
    grid = functions[0].grid
    if any(function.grid != grid for function in functions[1:]):
        raise DimensionError("initial or boundary data live on different grids")
    return grid


def solve_ivp(
    lagrangian: LagrangianSpec,
    u0: GridFunction,
    v0: GridFunction,
    time: TimeGrid,
    cfg: DiffConfig = DEFAULT_DIFF,
    overflow: float = 1e12,
) -> SolveReport:
    """Leapfrog integration of u″ = ρ₁(u) for L(u, e) = ½⟨e, e⟩ − V(u)."""
    grid = _check_endpoint_grids(u0, v0)
    if not lagrangian.is_separable:
        raise UnsupportedFormError(
            f"leapfrog needs L(u, e) = ½⟨e, e⟩ − V(u); {lagrangian.describe()} is not of that form"
        )
    dt = time.dt
    positions = np.empty((time.M + 1,) + grid.shape)
    velocities = np.empty_like(positions)
    positions[0] = u0.values
    velocities[0] = v0.values
    u = u0.values.copy()
    v = v0.values.copy()
    acceleration = lagrangian.force(grid, u, cfg)
    log_every = max(1, time.M // 10)
    for step in range(1, time.M + 1):
        with np.errstate(all="ignore"):
            v_half = v + 0.5 * dt * acceleration
            u = u + dt * v_half
            acceleration = lagrangian.force(grid, u, cfg)
            v = v_half + 0.5 * dt * acceleration
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise DivergenceError("leapfrog produced non-finite values", step)
        if sup_norm(u) > overflow or sup_norm(v) > overflow:
            raise DivergenceError(f"leapfrog state exceeded {overflow:.1e}", step)
        positions[step] = u
        velocities[step] = v
        if step % log_every == 0:
            logger.debug("leapfrog step %d/%d: p0(u)=%.6e", step, time.M, sup_norm(u))

    solution = CurveInE(time, grid, positions)
    residual = el_residual(lagrangian, solution, cfg) if time.M >= MIN_RESIDUAL_NODES else None
    energies = energy_series(lagrangian, grid, positions, velocities, cfg)
    logger.info("solve-ivp: %d leapfrog steps of %.6g", time.M, dt)
    return SolveReport(solution, "leapfrog", time.M, True, residual, energies)


BVP_LINE_SEARCHES = ("armijo", "wolfe", "none")
MIN_BVP_NODES = 4


@dataclass(frozen=True)
class BVPOptions:
    """Stopping, line-search and divergence settings for the Newton-Krylov solve."""

    max_iterations: int = 50
    gtol: float = 1e-9
    line_search: str = "armijo"
    inner_maxiter: int = 40
    divergence: float = 1e3

    def __post_init__(self) -> None:
        if self.max_iterations < 0:
            raise ConfigurationError("solver.max_iterations", "must be non-negative")
        if not self.gtol > 0.0:
            raise ConfigurationError("solver.gtol", f"must be positive, got {self.gtol}")
        if self.line_search not in BVP_LINE_SEARCHES:
            raise ConfigurationError(
                "solver.line_search",
                f"must be one of {', '.join(BVP_LINE_SEARCHES)}, got {self.line_search!r}",
            )
        if self.inner_maxiter < 1:
            raise ConfigurationError("solver.inner_maxiter", f"must be positive, got {self.inner_maxiter}")
        if not self.divergence > 1.0:
            raise ConfigurationError("solver.divergence", f"must exceed 1, got {self.divergence}")

    @property
    def search(self) -> Optional[str]:
        return None if self.line_search == "none" else self.line_search


def collocation_residual(
    lagrangian: LagrangianSpec,
    grid: PeriodicGrid,
    positions: np.ndarray,
    dt: float,
    cfg: DiffConfig = DEFAULT_DIFF,
) -> np.ndarray:
    """ρ₁ − d/dt ρ₂ of the lifted sample stack at nodes 1..M−1.

    Lift and momentum rate both use the order-4 time stencil, the same pair
    the lifted action and the variation family see.
    """
    velocities = time_derivative(positions, dt, RESIDUAL_ORDER)
    rho1 = curve_densities(lagrangian, grid, positions, velocities, 1, cfg)
    rho2 = curve_densities(lagrangian, grid, positions, velocities, 2, cfg)
    return (rho1 - time_derivative(rho2, dt, RESIDUAL_ORDER))[1:-1]


def _kinetic_preconditioner(interior: int, width: int, dt: float) -> LinearOperator:
    """Inverse of (1/Δt²)·tridiag(−1, 2, −1) applied to every fibre column."""
    ab = np.zeros((2, interior))
    ab[0, 1:] = -1.0 / dt**2
    ab[1, :] = 2.0 / dt**2
    size = interior * width

    def apply(vector: np.ndarray) -> np.ndarray:
        block = np.asarray(vector, dtype=float).reshape(interior, width)
        return solveh_banded(ab, block).ravel()

    return LinearOperator((size, size), matvec=apply, dtype=float)


@dataclass
class _NewtonMonitor:
    """Counts outer iterations and stops runs whose residual keeps growing."""

    start_norm: float
    divergence: float
    iterations: int = 0

    def __call__(self, x: np.ndarray, f: np.ndarray) -> None:
        self.iterations += 1
        norm = float(np.linalg.norm(f))
        logger.debug("bvp iteration %d: residual %.3e", self.iterations, sup_norm(f))
        if not norm <= self.divergence * self.start_norm:
            raise DivergenceError(
                f"boundary value residual grew from {self.start_norm:.3e} to {norm:.3e}",
                self.iterations,
            )


def solve_bvp(
    lagrangian: LagrangianSpec,
    u_a: GridFunction,
    u_b: GridFunction,
    time: TimeGrid,
    options: BVPOptions = BVPOptions(),
    cfg: DiffConfig = DEFAULT_DIFF,
) -> SolveReport:
    """Solve ρ₁ − d/dt ρ₂ = 0 at every interior node with the endpoints held fixed.

    The unknowns are the interior node values, started from linear
    interpolation. Newton-Krylov steps are preconditioned with the inverse
    kinetic second difference and make no use of the action value, which is
    in general a saddle point. Convergence is declared when the largest
    residual entry drops below ``gtol``; otherwise the report carries
    ``converged=False``. A residual whose norm grows past ``divergence``
    times its starting value raises :class:`DivergenceError`.
    """
    grid = _check_endpoint_grids(u_a, u_b)
    if time.M < MIN_BVP_NODES:
        raise PreconditionError(f"boundary value problems need M >= {MIN_BVP_NODES}, got {time.M}")
    dt = time.dt
    fractions = (time.nodes - time.a) / time.length
    positions = (1.0 - fractions)[:, None, None] * u_a.values[None] + fractions[
        :, None, None
    ] * u_b.values[None]
    positions[0] = u_a.values
    positions[-1] = u_b.values
    interior = time.M - 1
    shape = (interior,) + grid.shape

    def assemble(x: np.ndarray) -> np.ndarray:
        full = positions.copy()
        full[1:-1] = np.reshape(x, shape)
        return full

    monitor = _NewtonMonitor(0.0, options.divergence)

    def equations(x: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            values = collocation_residual(lagrangian, grid, assemble(x), dt, cfg)
        if not np.all(np.isfinite(values)):
            raise DivergenceError("boundary value residual became non-finite", monitor.iterations)
        return values.ravel()

    x = positions[1:-1].ravel()
    start = equations(x)
    monitor.start_norm = float(np.linalg.norm(start))
    if sup_norm(start) > options.gtol and options.max_iterations > 0:
        try:
            x = newton_krylov(
                equations,
                x,
                method="lgmres",
                inner_M=_kinetic_preconditioner(interior, grid.n * grid.m, dt),
                inner_maxiter=options.inner_maxiter,
                maxiter=options.max_iterations,
                f_tol=options.gtol,
                line_search=options.search,
                callback=monitor,
            )
        except NoConvergence as exc:
            x = np.asarray(exc.args[0], dtype=float).ravel()
    collocation_norm = sup_norm(equations(x))
    converged = collocation_norm <= options.gtol
    if not converged:
        logger.warning(
            "solve-bvp stopped after %d iterations with residual %.3e (gtol %.1e)",
            monitor.iterations,
            collocation_norm,
            options.gtol,
        )
    solution = CurveInE(time, grid, assemble(x))
    residual = el_residual(lagrangian, solution, cfg) if time.M >= MIN_RESIDUAL_NODES else None
    logger.info("solve-bvp: %d iterations, residual %.3e", monitor.iterations, collocation_norm)
    return SolveReport(
        solution,
        "newton-krylov",
        monitor.iterations,
        converged,
        residual,
        None,
        collocation_norm,
    )


@dataclass(frozen=True)
class EnergyDrift:
    """Oscillation amplitude and secular trend of an energy series."""

    initial: float
    amplitude: float
    slope: float

    @property
    def relative_slope(self) -> float:
        return abs(self.slope) / self.amplitude if self.amplitude > 0.0 else 0.0


def energy_drift(times: np.ndarray, energies: np.ndarray) -> EnergyDrift:
    energies = np.asarray(energies, dtype=float)
    amplitude = 0.5 * float(np.max(energies) - np.min(energies))
    slope = float(np.polyfit(np.asarray(times, dtype=float), energies, 1)[0])
    return EnergyDrift(float(energies[0]), amplitude, slope)


class ExactSolution(abc.ABC):
    """An analytic curve u(t, x) with its time derivative."""

    label: str = "exact"

    @abc.abstractmethod
    def position(self, t: float, x: np.ndarray) -> np.ndarray:
        """u(t, x) at the nodes, shape (n,) or (n, m)."""

    @abc.abstractmethod
    def velocity(self, t: float, x: np.ndarray) -> np.ndarray:
        """∂u/∂t(t, x) at the nodes."""

    def _on_grid(self, grid: PeriodicGrid, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = np.repeat(values[:, None], grid.m, axis=1)
        return np.broadcast_to(values, grid.shape)

    def sample(self, grid: PeriodicGrid, t: float) -> GridFunction:
        return GridFunction(grid, self._on_grid(grid, self.position(t, grid.nodes)))

    def sample_velocity(self, grid: PeriodicGrid, t: float) -> GridFunction:
        return GridFunction(grid, self._on_grid(grid, self.velocity(t, grid.nodes)))

    def samples(self, time: TimeGrid, grid: PeriodicGrid) -> np.ndarray:
        return np.stack(
            [self._on_grid(grid, self.position(float(t), grid.nodes)) for t in time.nodes]
        )

    def curve(self, time: TimeGrid, grid: PeriodicGrid) -> CurveInE:
        """Samples on the grids with the canonical (finite-difference) lift."""
        return CurveInE(time, grid, self.samples(time, grid))


@dataclass(frozen=True)
class StraightLine(ExactSolution):
    """u(t, x) = start(x) + t·rate(x)."""

    start: str = "1"
    rate: str = "1"
    label = "line"

    def position(self, t: float, x: np.ndarray) -> np.ndarray:
        return FieldExpression.parse(self.start)(x) + t * FieldExpression.parse(self.rate)(x)

    def velocity(self, t: float, x: np.ndarray) -> np.ndarray:
        return FieldExpression.parse(self.rate)(x)


@dataclass(frozen=True)
class HarmonicCosine(ExactSolution):
    """u(t, x) = cos(ωt)·profile(x), a solution for HarmonicField(ω)."""

    omega: float = 1.0
    profile: str = "1 + 0.5*sin(x)"
    label = "harmonic"

    def position(self, t: float, x: np.ndarray) -> np.ndarray:
        return math.cos(self.omega * t) * FieldExpression.parse(self.profile)(x)

    def velocity(self, t: float, x: np.ndarray) -> np.ndarray:
        return -self.omega * math.sin(self.omega * t) * FieldExpression.parse(self.profile)(x)


@dataclass(frozen=True)
class TravelingWave(ExactSolution):
    """u(t, x) = amplitude·sin(k(x − ct)), a solution for Wave(c)."""

    c: float = 1.0
    k: int = 1
    amplitude: float = 1.0
    label = "traveling-wave"

    def position(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.amplitude * np.sin(self.k * (x - self.c * t))

    def velocity(self, t: float, x: np.ndarray) -> np.ndarray:
        return -self.amplitude * self.k * self.c * np.cos(self.k * (x - self.c * t))


@dataclass(frozen=True)
class ExpressionSolution(ExactSolution):
    """u(t, x) given as a field expression; ∂u/∂t is derived symbolically."""

    text: str
    label = "expression"

    def position(self, t: float, x: np.ndarray) -> np.ndarray:
        return FieldExpression.parse(self.text)(x, t)

    def velocity(self, t: float, x: np.ndarray) -> np.ndarray:
        expression = to_sympy(FieldExpression.parse(self.text).tree)
        x_symbol, t_symbol = sp.Symbol("x", real=True), sp.Symbol("t", real=True)
        rate = sp.lambdify((x_symbol, t_symbol), sp.diff(expression, t_symbol), modules="numpy")
        return np.broadcast_to(np.asarray(rate(x, t), dtype=float), np.shape(x))


EXACT_KINDS = ("line", "harmonic", "traveling-wave", "expression")


def exact_solution_from_config(section: Dict[str, str]) -> ExactSolution:
    """Build an analytic curve from a ``[curve]`` mapping."""
    kind = section.get("kind", "line").strip().lower().replace("_", "-")
    if kind == "line":
        return StraightLine(section.get("start", "1"), section.get("rate", "1"))
    if kind == "harmonic":
        return HarmonicCosine(float(section.get("omega", 1.0)), section.get("profile", "1 + 0.5*sin(x)"))
    if kind == "traveling-wave":
        return TravelingWave(
            float(section.get("c", 1.0)),
            int(section.get("k", 1)),
            float(section.get("amplitude", 1.0)),
        )
    if kind == "expression":
        if "u" not in section:
            raise ConfigurationError("curve.u", "an expression curve needs u = <expression in x, t>")
        return ExpressionSolution(section["u"])
    raise ConfigurationError("curve.kind", f"unknown kind {kind!r}; choose one of {', '.join(EXACT_KINDS)}")


@dataclass(frozen=True, eq=False)
class ConvergenceResult:
    """Errors along a refinement ladder and the fitted order."""

    table: pd.DataFrame = field(repr=False)
    order: Optional[float]
    mode: str

    @property
    def status(self) -> str:
        return "floor" if self.order is None else "fitted"


def fit_order(
    steps: Sequence[float], errors: Sequence[float], floor: float = ERROR_FLOOR
) -> Optional[float]:
    """Least-squares slope of log(error) against log(step) above ``floor``."""
    pairs = [(s, e) for s, e in zip(steps, errors) if e > floor and np.isfinite(e)]
    if len(pairs) < 2:
        return None
    log_steps = np.log([s for s, _ in pairs])
    log_errors = np.log([e for _, e in pairs])
    return float(np.polyfit(log_steps, log_errors, 1)[0])


def _ladder(grid_sizes: Sequence[int], time_sizes: Sequence[int]) -> List[Tuple[int, int]]:
    grid_sizes, time_sizes = list(grid_sizes), list(time_sizes)
    if len(grid_sizes) == 1:
        grid_sizes = grid_sizes * len(time_sizes)
    if len(time_sizes) == 1:
        time_sizes = time_sizes * len(grid_sizes)
    if len(grid_sizes) != len(time_sizes):
        raise PreconditionError(
            f"ladder lists differ in length: {len(grid_sizes)} N values, {len(time_sizes)} M values"
        )
    if len(grid_sizes) < 3:
        raise InsufficientDataError(
            f"a convergence order needs at least 3 ladder points, got {len(grid_sizes)}"
        )
    return list(zip(grid_sizes, time_sizes))


def convergence_study(
    lagrangian: LagrangianSpec,
    exact: ExactSolution,
    grid_sizes: Sequence[int],
    time_sizes: Sequence[int],
    interval: Tuple[float, float] = (0.0, 1.0),
    mode: str = "residual",
    m: int = 1,
    cfg: DiffConfig = DEFAULT_DIFF,
) -> ConvergenceResult:
    """Errors of ``el_residual`` or ``solve_ivp`` along a refinement ladder.

    Residual mode measures max_j p₀(R(t_j)) on the exact curve; ivp mode
    measures the largest nodal error of the leapfrog solution. The order is
    fitted against Δt when M varies along the ladder and against h otherwise.
    """
    if mode not in ("residual", "ivp"):
        raise PreconditionError(f"convergence mode must be 'residual' or 'ivp', got {mode!r}")
    ladder = _ladder(grid_sizes, time_sizes)
    rows = []
    for n, big_m in ladder:
        grid = PeriodicGrid(n, m)
        time = TimeGrid(interval[0], interval[1], big_m)
        if mode == "residual":
            error = el_residual(lagrangian, exact.curve(time, grid), cfg).max_norm
        else:
            report = solve_ivp(
                lagrangian,
                exact.sample(grid, time.a),
                exact.sample_velocity(grid, time.a),
                time,
                cfg,
            )
            error = sup_norm(report.solution.samples - exact.samples(time, grid))
        logger.info("ladder N=%d M=%d: error %.6e", n, big_m, error)
        rows.append({"N": n, "M": big_m, "dt": time.dt, "h": grid.spacing, "error": error})
    table = pd.DataFrame(rows)
    time_varies = table["M"].nunique() > 1
    steps = (table["dt"] if time_varies else table["h"]).to_numpy()
    errors = table["error"].to_numpy()
    observed = [float("nan")]
    for (s0, e0), (s1, e1) in zip(zip(steps[:-1], errors[:-1]), zip(steps[1:], errors[1:])):
        if e0 > ERROR_FLOOR and e1 > ERROR_FLOOR:
            observed.append(math.log(e0 / e1) / math.log(s0 / s1))
        else:
            observed.append(float("nan"))
    table["observed_order"] = observed
    order = fit_order(list(steps), list(errors))
    return ConvergenceResult(table, order, mode)
