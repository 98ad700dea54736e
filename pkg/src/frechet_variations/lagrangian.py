"""Lagrangians, lifted curves, the action functional and its first variation.

A Lagrangian is a function L(u, e) of a configuration u ∈ E and a velocity
e ∈ E. Builtins are defined over E = C^∞(S¹, ℝᵐ) with the discrete pairing
``⟨a, b⟩ = (2π/N) Σᵢ aᵢ·bᵢ``; user Lagrangians integrate a density
ℓ(x, u, ux, e) over the grid, componentwise. All evaluations are batched:
``u`` and ``e`` may carry leading axes in front of the (n, m) grid shape.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, ClassVar, Dict, Mapping, NamedTuple, Optional, Tuple

import numpy as np
import sympy as sp

from .calculus import DEFAULT_DIFF, DiffConfig, curve_densities
from .dubois_reymond import VARIATION_QUADRATURE, VariationField
from .errors import (
    ConfigurationError,
    DimensionError,
    EvaluationError,
    PreconditionError,
    UnsupportedFormError,
)
from .expressions import evaluate, parse_expression, print_expression, to_sympy
from .expressions import Node
from .function_space import GridFunction, PeriodicGrid, sup_norm
from .logging_utils import get_logger
from .stencils import central_difference, periodic_derivative, time_derivative
from .weak_integral import (
    DEFAULT_QUADRATURE,
    PrimalCurve,
    Quadrature,
    SampledCurve,
)

logger = get_logger(__name__)

FIRST_VARIATION_MODES = ("direct", "eq6", "curve")
MODE_ALIASES = {"pairing": "eq6"}
LAGRANGIAN_KEYS = frozenset({"omega", "c", "beta", "expression", "symbolic", "stencil_order"})


def _inner(grid: PeriodicGrid, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return grid.weight * np.sum(a * b, axis=(-2, -1))


def _dx(grid: PeriodicGrid, values: np.ndarray, order: int) -> np.ndarray:
    if grid.is_point:
        return np.zeros(np.shape(values))
    return periodic_derivative(values, grid.spacing, order, axis=-2)


def _check_parameter(name: str, value: float, non_negative: bool = True) -> None:
    if not np.isfinite(value):
        raise PreconditionError(f"{name} must be finite, got {value}")
    if non_negative and value < 0.0:
        raise PreconditionError(f"{name} must be non-negative, got {value}")


class LagrangianSpec(abc.ABC):
    """A Lagrangian L: U × E → ℝ with closed-form gradient densities."""

    kind: ClassVar[str] = "lagrangian"
    stencil_order: int

    @abc.abstractmethod
    def value(self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray) -> np.ndarray:
        """L(u, e) for batched node values; the result drops the grid axes."""

    @abc.abstractmethod
    def density(
        self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray, slot: int
    ) -> np.ndarray:
        """Density of D_slot L(u, e), batched like :meth:`value`."""

    @property
    def has_analytic_densities(self) -> bool:
        return True

    @property
    def is_separable(self) -> bool:
        """True when L(u, e) = ½⟨e, e⟩ − V(u)."""
        return True

    def parameters(self) -> Dict[str, object]:
        return {}

    def describe(self) -> str:
        params = ", ".join(f"{key}={value}" for key, value in self.parameters().items())
        return f"{self.kind}({params})"

    def checked_value(self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray) -> float:
        """Scalar L(u, e); a non-finite value raises :class:`EvaluationError`."""
        with np.errstate(all="ignore"):
            result = float(np.asarray(self.value(grid, u, e)))
        if not np.isfinite(result):
            raise EvaluationError(f"{self.describe()} is not finite", point=(u, e))
        return result

    def __call__(self, u: GridFunction, e: GridFunction) -> float:
        if u.grid != e.grid:
            raise DimensionError(f"grid mismatch: {u.grid} vs {e.grid}")
        return self.checked_value(u.grid, u.values, e.values)

    def force(
        self, grid: PeriodicGrid, u: np.ndarray, cfg: DiffConfig = DEFAULT_DIFF
    ) -> np.ndarray:
        """Acceleration density ρ₁(u, ·) of a separable Lagrangian.

        Lagrangians without closed-form densities need the finite-difference
        backend in ``cfg``.
        """
        if not self.is_separable:
            raise UnsupportedFormError(
                f"{self.describe()} is not of the form ½⟨e,e⟩ − V(u)"
            )
        u = np.asarray(u, dtype=float)
        return curve_densities(self, grid, u[None], np.zeros((1,) + u.shape), 1, cfg)[0]

    @classmethod
    def from_config(cls, section: Mapping[str, object]) -> "LagrangianSpec":
        """Build a Lagrangian from a ``[lagrangian]`` mapping."""
        kind = str(section.get("kind", "free-particle"))
        params = {key: value for key, value in section.items() if key in LAGRANGIAN_KEYS}
        return build_lagrangian(kind, **params)  # type: ignore[arg-type]


@dataclass(frozen=True)
class FreeParticle(LagrangianSpec):
    """L(u, e) = ½⟨e, e⟩."""

    stencil_order: int = 4

    kind: ClassVar[str] = "free-particle"

    def value(self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray) -> np.ndarray:
        batch = np.broadcast_shapes(np.shape(u), np.shape(e))[:-2]
        return np.broadcast_to(0.5 * _inner(grid, e, e), batch)

    def density(
        self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray, slot: int
    ) -> np.ndarray:
        shape = np.broadcast_shapes(np.shape(u), np.shape(e))
        if slot == 1:
            return np.zeros(shape)
        return np.broadcast_to(e, shape).astype(float)


@dataclass(frozen=True)
class HarmonicField(LagrangianSpec):
    """L(u, e) = ½⟨e, e⟩ − ½ω²⟨u, u⟩."""

    omega: float = 1.0
    stencil_order: int = 4

    kind: ClassVar[str] = "harmonic"

    def __post_init__(self) -> None:
        _check_parameter("omega", self.omega)

    def parameters(self) -> Dict[str, object]:
        return {"omega": self.omega}

    def value(self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray) -> np.ndarray:
        return 0.5 * _inner(grid, e, e) - 0.5 * self.omega**2 * _inner(grid, u, u)

    def density(
        self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray, slot: int
    ) -> np.ndarray:
        shape = np.broadcast_shapes(np.shape(u), np.shape(e))
        if slot == 1:
            return np.broadcast_to(-self.omega**2 * u, shape).astype(float)
        return np.broadcast_to(e, shape).astype(float)


@dataclass(frozen=True)
class Wave(LagrangianSpec):
    """L(u, e) = ½⟨e, e⟩ − ½c²⟨Dₓu, Dₓu⟩."""

    c: float = 1.0
    stencil_order: int = 4

    kind: ClassVar[str] = "wave"

    def __post_init__(self) -> None:
        _check_parameter("c", self.c)

    def parameters(self) -> Dict[str, object]:
        return {"c": self.c}

    def value(self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray) -> np.ndarray:
        ux = _dx(grid, u, self.stencil_order)
        return 0.5 * _inner(grid, e, e) - 0.5 * self.c**2 * _inner(grid, ux, ux)

    def density(
        self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray, slot: int
    ) -> np.ndarray:
        shape = np.broadcast_shapes(np.shape(u), np.shape(e))
        if slot == 1:
            # Dₓ is skew-adjoint under the periodic pairing
            uxx = _dx(grid, _dx(grid, u, self.stencil_order), self.stencil_order)
            return np.broadcast_to(self.c**2 * uxx, shape).astype(float)
        return np.broadcast_to(e, shape).astype(float)


@dataclass(frozen=True)
class SineGordon(LagrangianSpec):
    """L(u, e) = ½⟨e, e⟩ − ½c²⟨Dₓu, Dₓu⟩ − β∫(1 − cos u)."""

    c: float = 1.0
    beta: float = 1.0
    stencil_order: int = 4

    kind: ClassVar[str] = "sine-gordon"

    def __post_init__(self) -> None:
        _check_parameter("c", self.c)
        _check_parameter("beta", self.beta, non_negative=False)

    def parameters(self) -> Dict[str, object]:
        return {"c": self.c, "beta": self.beta}

    def value(self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray) -> np.ndarray:
        ux = _dx(grid, u, self.stencil_order)
        potential = grid.weight * np.sum(1.0 - np.cos(u), axis=(-2, -1))
        return (
            0.5 * _inner(grid, e, e)
            - 0.5 * self.c**2 * _inner(grid, ux, ux)
            - self.beta * potential
        )

    def density(
        self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray, slot: int
    ) -> np.ndarray:
        shape = np.broadcast_shapes(np.shape(u), np.shape(e))
        if slot == 1:
            uxx = _dx(grid, _dx(grid, u, self.stencil_order), self.stencil_order)
            return np.broadcast_to(self.c**2 * uxx - self.beta * np.sin(u), shape).astype(
                float
            )
        return np.broadcast_to(e, shape).astype(float)


@dataclass(frozen=True)
class DensityExpression:
    """A parsed density ℓ(x, u, ux, e)."""

    text: str
    tree: Node

    VARIABLES = frozenset({"x", "u", "ux", "e"})

    @classmethod
    def parse(cls, text: str) -> "DensityExpression":
        return cls(text, parse_expression(text, cls.VARIABLES))

    @cached_property
    def symbolic(self) -> sp.Expr:
        return to_sympy(self.tree)

    def evaluate(
        self, x: np.ndarray, u: np.ndarray, ux: np.ndarray, e: np.ndarray
    ) -> np.ndarray:
        return evaluate(self.tree, {"x": x, "u": u, "ux": ux, "e": e})

    def __str__(self) -> str:
        return print_expression(self.tree)


def parse_density(text: str) -> DensityExpression:
    """Parse a Lagrangian density over the variables x, u, ux and e."""
    return DensityExpression.parse(text)


class _CompiledDensity(NamedTuple):
    d_u: Callable[..., object]
    d_ux: Callable[..., object]
    d_e: Callable[..., object]
    separable: bool


_SYMBOLS = tuple(sp.Symbol(name, real=True) for name in ("x", "u", "ux", "e"))


def _compile(expression: DensityExpression) -> _CompiledDensity:
    x, u, ux, e = _SYMBOLS
    ell = expression.symbolic
    partials = [sp.diff(ell, symbol) for symbol in (u, ux, e)]
    separable = sp.simplify(partials[2] - e) == 0
    compiled = [sp.lambdify(_SYMBOLS, partial, modules="numpy") for partial in partials]
    logger.debug(
        "compiled density %s: d/du=%s d/dux=%s d/de=%s",
        expression.text,
        *partials,
    )
    return _CompiledDensity(compiled[0], compiled[1], compiled[2], bool(separable))


@dataclass(frozen=True)
class UserDensity(LagrangianSpec):
    """L(u, e) = (2π/N) Σᵢ Σₖ ℓ(xᵢ, uᵢₖ, (Dₓu)ᵢₖ, eᵢₖ) for a parsed density ℓ.

    With ``symbolic`` set, gradient densities come from sympy derivatives of ℓ:
    ρ₁ = ∂ℓ/∂u − Dₓ(∂ℓ/∂ux) and ρ₂ = ∂ℓ/∂e.
    """

    expression: DensityExpression
    symbolic: bool = True
    stencil_order: int = 4

    kind: ClassVar[str] = "user"

    @classmethod
    def from_text(cls, text: str, **kwargs: object) -> "UserDensity":
        return cls(parse_density(text), **kwargs)  # type: ignore[arg-type]

    @cached_property
    def _compiled(self) -> _CompiledDensity:
        return _compile(self.expression)

    @property
    def has_analytic_densities(self) -> bool:
        return self.symbolic

    @property
    def is_separable(self) -> bool:
        return self._compiled.separable

    def parameters(self) -> Dict[str, object]:
        return {"expression": self.expression.text}

    def _arguments(
        self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        x = grid.nodes[:, None]
        ux = _dx(grid, u, self.stencil_order)
        return x, np.asarray(u, dtype=float), ux, np.asarray(e, dtype=float)

    def value(self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray) -> np.ndarray:
        x, u, ux, e = self._arguments(grid, u, e)
        shape = np.broadcast_shapes(u.shape, e.shape)
        ell = np.broadcast_to(self.expression.evaluate(x, u, ux, e), shape)
        return grid.weight * np.sum(ell, axis=(-2, -1))

    def density(
        self, grid: PeriodicGrid, u: np.ndarray, e: np.ndarray, slot: int
    ) -> np.ndarray:
        if not self.symbolic:
            raise UnsupportedFormError(
                f"{self.describe()} was built without symbolic densities"
            )
        x, u, ux, e = self._arguments(grid, u, e)
        shape = np.broadcast_shapes(u.shape, e.shape)
        compiled = self._compiled
        with np.errstate(all="ignore"):
            if slot == 1:
                d_u = np.broadcast_to(np.asarray(compiled.d_u(x, u, ux, e), float), shape)
                d_ux = np.broadcast_to(np.asarray(compiled.d_ux(x, u, ux, e), float), shape)
                return d_u - _dx(grid, d_ux, self.stencil_order)
            d_e = compiled.d_e(x, u, ux, e)
            return np.broadcast_to(np.asarray(d_e, float), shape).astype(float)


BUILTIN_KINDS = {
    "free-particle": FreeParticle,
    "harmonic": HarmonicField,
    "wave": Wave,
    "sine-gordon": SineGordon,
}


def normalize_kind(kind: str) -> str:
    name = kind.strip().lower().replace("_", "-")
    aliases = {
        "freeparticle": "free-particle",
        "free": "free-particle",
        "harmonicfield": "harmonic",
        "harmonic-field": "harmonic",
        "sinegordon": "sine-gordon",
        "userdensity": "user",
        "user-density": "user",
        "density": "user",
    }
    return aliases.get(name, name)


def build_lagrangian(
    kind: str,
    *,
    omega: float = 1.0,
    c: float = 1.0,
    beta: float = 1.0,
    expression: Optional[str] = None,
    symbolic: bool = True,
    stencil_order: int = 4,
) -> LagrangianSpec:
    """Instantiate a Lagrangian by name with the parameters that kind uses."""
    name = normalize_kind(kind)
    if name == "free-particle":
        return FreeParticle(stencil_order=stencil_order)
    if name == "harmonic":
        return HarmonicField(omega=float(omega), stencil_order=stencil_order)
    if name == "wave":
        return Wave(c=float(c), stencil_order=stencil_order)
    if name == "sine-gordon":
        return SineGordon(c=float(c), beta=float(beta), stencil_order=stencil_order)
    if name == "user":
        if not expression:
            raise ConfigurationError(
                "lagrangian.expression", "a user Lagrangian needs a density expression"
            )
        return UserDensity(parse_density(expression), symbolic, stencil_order)
    choices = ", ".join(sorted(BUILTIN_KINDS) + ["user"])
    raise ConfigurationError("lagrangian.kind", f"unknown kind {kind!r}; choose one of {choices}")


@dataclass(frozen=True, eq=False)
class CurveInE(SampledCurve):
    """A time-sampled curve in E together with its canonical lift (u, u′).

    When ``lift`` is omitted it is the order-4 time difference of the samples,
    one-sided at the interval ends.
    """

    lift: Optional[np.ndarray] = field(default=None, repr=False)
    lift_order: int = 4

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.lift is None:
            lift = time_derivative(self.samples, self.time.dt, self.lift_order)
        else:
            lift = np.array(self.lift, dtype=float)
            if lift.ndim == 2 and self.grid.m == 1:
                lift = lift.reshape(self.samples.shape)
            if lift.shape != self.samples.shape:
                raise DimensionError(
                    f"lift must have shape {self.samples.shape}, got {lift.shape}"
                )
            if not np.all(np.isfinite(lift)):
                raise PreconditionError("lift contains non-finite entries")
        lift.setflags(write=False)
        object.__setattr__(self, "lift", lift)

    @property
    def velocities(self) -> np.ndarray:
        assert self.lift is not None
        return self.lift

    def position(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.samples[j])

    def velocity(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.velocities[j])

    def as_primal(self) -> PrimalCurve:
        return PrimalCurve(self.time, self.grid, self.samples)

    def relifted(self) -> "CurveInE":
        """The same samples with the lift recomputed from them."""
        return CurveInE(self.time, self.grid, self.samples, lift_order=self.lift_order)

    def restrict_to(self, start: int, stop: int) -> "CurveInE":
        return CurveInE(
            self.time.sub(start, stop),
            self.grid,
            self.samples[start : stop + 1],
            lift=self.velocities[start : stop + 1],
            lift_order=self.lift_order,
        )

    def perturbed(
        self,
        variation: VariationField,
        s: float,
        curvature: Optional[VariationField] = None,
    ) -> "CurveInE":
        """The curve c + sA (+ ½s²B) with the correspondingly varied lift."""
        samples = self.samples + s * variation.samples
        lift = self.velocities + s * variation.derivative
        if curvature is not None:
            samples = samples + 0.5 * s * s * curvature.samples
            lift = lift + 0.5 * s * s * curvature.derivative
        return CurveInE(
            self.time, self.grid, samples, lift=lift, lift_order=self.lift_order
        )


def action_density(lagrangian: LagrangianSpec, curve: CurveInE) -> np.ndarray:
    """Samples of t ↦ L(u(t), u′(t))."""
    with np.errstate(all="ignore"):
        values = np.asarray(
            lagrangian.value(curve.grid, curve.samples, curve.velocities), dtype=float
        )
    values = np.broadcast_to(values, (len(curve),))
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        j = int(bad[0])
        raise EvaluationError(
            f"{lagrangian.describe()} is not finite along the curve",
            point=(curve.samples[j], curve.velocities[j]),
            time=float(curve.time.nodes[j]),
        )
    return values


def action(
    lagrangian: LagrangianSpec,
    curve: CurveInE,
    quadrature: Quadrature = DEFAULT_QUADRATURE,
) -> float:
    """F(c) = ∫ L(u(t), u′(t)) dt by the given quadrature."""
    weights = quadrature.weights(curve.time)
    return float(np.dot(weights, action_density(lagrangian, curve)))


def _check_variation(curve: CurveInE, variation: VariationField) -> None:
    if variation.time != curve.time or variation.grid != curve.grid:
        raise DimensionError("variation and curve live on different time or space grids")
    variation.check_support()


def default_curvature(variation: VariationField) -> VariationField:
    """B = μ⊙μ, compactly supported wherever μ is."""
    return VariationField(
        variation.time,
        variation.grid,
        variation.samples * variation.samples,
        2.0 * variation.samples * variation.derivative,
        variation.margin,
    )


def first_variation(
    lagrangian: LagrangianSpec,
    curve: CurveInE,
    variation: VariationField,
    mode: str = "direct",
    cfg: DiffConfig = DEFAULT_DIFF,
    quadrature: Quadrature = VARIATION_QUADRATURE,
    curvature: Optional[VariationField] = None,
) -> float:
    """T_c F(A) for a compactly supported variation A.

    ``direct`` differentiates s ↦ F(c + sA) at 0, ``eq6`` (alias ``pairing``)
    integrates D₁L(u, u′)(μ) + D₂L(u, u′)(μ′) over time, and ``curve``
    differentiates along the curve of curves c + sA + ½s²B.
    """
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in FIRST_VARIATION_MODES:
        raise PreconditionError(
            f"first variation mode must be one of {FIRST_VARIATION_MODES}, got {mode!r}"
        )
    _check_variation(curve, variation)

    if mode == "eq6":
        grid = curve.grid
        rho1 = curve_densities(lagrangian, grid, curve.samples, curve.velocities, 1, cfg)
        rho2 = curve_densities(lagrangian, grid, curve.samples, curve.velocities, 2, cfg)
        integrand = _inner(grid, rho1, variation.samples) + _inner(
            grid, rho2, variation.derivative
        )
        return float(np.dot(quadrature.weights(curve.time), integrand))

    direction_scale = max(sup_norm(variation.samples), sup_norm(variation.derivative))
    if direction_scale == 0.0:
        return 0.0
    base_scale = max(sup_norm(curve.samples), sup_norm(curve.velocities))
    step = cfg.step_for(base_scale, direction_scale)
    second = None
    if mode == "curve":
        second = curvature if curvature is not None else default_curvature(variation)

    def phi(s: float) -> float:
        return action(lagrangian, curve.perturbed(variation, s, second), quadrature)

    return float(central_difference(phi, step, cfg.fd_order))
