from __future__ import annotations

import configparser
import os
from pathlib import Path
from typing import Dict, List, Mapping, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from .calculus import DiffConfig
from .el_solver import VERIFY_MODES, BVPOptions, ExactSolution, exact_solution_from_config
from .errors import ConfigurationError
from .expressions import FieldExpression
from .function_space import MIN_GRID_NODES, GridFunction, PeriodicGrid, is_power_of_two
from .lagrangian import MODE_ALIASES, LagrangianSpec, build_lagrangian, parse_density
from .logging_utils import get_logger
from .weak_integral import QUADRATURE_RULES, DualCurve, Quadrature, TimeGrid

logger = get_logger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parents[2]
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "config" / "run.cfg"
DEFAULT_CONFIG_PATH_STR = str(DEFAULT_CONFIG_PATH)

COMPONENT_SEPARATOR = ";"


def get_project_root() -> Path:
    """Return the repository root directory."""

    return PROJECT_ROOT


def get_config_dir() -> Path:
    """Return the directory storing configuration files."""

    return PROJECT_ROOT / "config"


def _split_components(text: str) -> List[str]:
    parts = [part.strip() for part in str(text).split(COMPONENT_SEPARATOR)]
    if not all(parts):
        raise ValueError(f"empty component in field expression {text!r}")
    return parts


def _check_field_expression(text: Optional[str]) -> Optional[str]:
    if text is None:
        return None
    for part in _split_components(text):
        FieldExpression.parse(part)
    return text


def _split_list(value: object) -> object:
    if isinstance(value, str):
        return [item.strip() for item in value.replace(";", ",").split(",") if item.strip()]
    return value


def field_values(
    text: str, grid: PeriodicGrid, t: float = 0.0, field: str = "field"
) -> np.ndarray:
    """Evaluate a ``;``-separated field expression at the grid nodes.

    One component is broadcast to every fibre dimension; otherwise the count
    must equal ``m``.
    """
    parts = _split_components(text)
    if len(parts) not in (1, grid.m):
        raise ConfigurationError(
            field, f"{text!r} has {len(parts)} components but the grid has m={grid.m}"
        )
    columns = [FieldExpression.parse(part)(grid.nodes, t) for part in parts]
    if len(columns) == 1:
        columns = columns * grid.m
    return np.column_stack(columns)


def field_function(
    text: str, grid: PeriodicGrid, t: float = 0.0, field: str = "field"
) -> GridFunction:
    return GridFunction(grid, field_values(text, grid, t, field))


def field_curve(
    text: str, time: TimeGrid, grid: PeriodicGrid, field: str = "field"
) -> DualCurve:
    """A dual curve whose density at time t is the field expression at t."""
    return DualCurve.from_function(time, grid, lambda t: field_values(text, grid, t, field))


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", str_strip_whitespace=True)


class LagrangianSection(_Section):
    kind: str = "free-particle"
    omega: float = 1.0
    c: float = 1.0
    beta: float = 1.0
    expression: Optional[str] = None
    symbolic: bool = True

    @field_validator("expression")
    @classmethod
    def _parse_expression(cls, value: Optional[str]) -> Optional[str]:
        if value is not None:
            parse_density(value)
        return value

    @field_validator("omega", "c")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if not np.isfinite(value) or value < 0.0:
            raise ValueError(f"must be finite and non-negative, got {value}")
        return value


class GridSection(_Section):
    N: int = 16
    m: int = 1

    @field_validator("N")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value < MIN_GRID_NODES or not is_power_of_two(value):
            raise ValueError(f"must be a power of two >= {MIN_GRID_NODES}, got {value}")
        return value

    @field_validator("m")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"must be at least 1, got {value}")
        return value


class TimeSection(_Section):
    a: float = 0.0
    b: float = 1.0
    M: int = 64

    @field_validator("M")
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"must be at least 1, got {value}")
        return value


class QuadratureSection(_Section):
    rule: str = "simpson"
    points: int = 3

    @field_validator("rule")
    @classmethod
    def _known_rule(cls, value: str) -> str:
        value = value.lower()
        if value not in QUADRATURE_RULES:
            raise ValueError(f"must be one of {', '.join(QUADRATURE_RULES)}, got {value!r}")
        return value


class DiffSection(_Section):
    backend: str = "analytic"
    fd_step: float = 1e-5
    fd_floor: float = 1e-7
    fd_order: int = 4
    stencil_order: int = 4

    @field_validator("fd_order", "stencil_order")
    @classmethod
    def _order(cls, value: int) -> int:
        if value not in (2, 4):
            raise ValueError(f"must be 2 or 4, got {value}")
        return value


class RunSection(_Section):
    seed: int = 0
    output: str = "output"

    @field_validator("seed")
    @classmethod
    def _unsigned(cls, value: int) -> int:
        if not 0 <= value < 2**64:
            raise ValueError(f"must be an unsigned 64-bit integer, got {value}")
        return value


class CurveSection(_Section):
    """Analytic curve descriptor.

    ``start``/``rate`` belong to lines, ``omega``/``profile`` to harmonic
    curves, ``c``/``k``/``amplitude`` to traveling waves and ``u`` to
    expression curves. Keys left unset take the curve's defaults.
    """

    kind: str = "line"
    tol: Optional[float] = None
    start: Optional[str] = None
    rate: Optional[str] = None
    omega: Optional[str] = None
    profile: Optional[str] = None
    c: Optional[str] = None
    k: Optional[str] = None
    amplitude: Optional[str] = None
    u: Optional[str] = None

    def descriptor(self) -> Dict[str, str]:
        values = self.model_dump(exclude={"tol"}, exclude_none=True)
        return {key: str(value) for key, value in values.items()}


class InitialSection(_Section):
    u: str = "0"
    v: str = "0"

    @field_validator("u", "v")
    @classmethod
    def _parse(cls, value: str) -> Optional[str]:
        return _check_field_expression(value)


class BoundarySection(_Section):
    u_a: str = "0"
    u_b: str = "0"

    @field_validator("u_a", "u_b")
    @classmethod
    def _parse(cls, value: str) -> Optional[str]:
        return _check_field_expression(value)


class SolverSection(_Section):
    max_iterations: int = 50
    gtol: float = 1e-9
    line_search: str = "armijo"
    inner_maxiter: int = 40
    divergence: float = 1e3


class VerifySection(_Section):
    count: int = 50
    tol: float = 1e-7
    mode: str = "direct"
    source: str = "curve"
    expect: str = "pass"

    @field_validator("mode")
    @classmethod
    def _mode(cls, value: str) -> str:
        value = MODE_ALIASES.get(value, value)
        if value not in VERIFY_MODES:
            raise ValueError(f"must be one of {', '.join(VERIFY_MODES)}, got {value!r}")
        return value

    @field_validator("source")
    @classmethod
    def _source(cls, value: str) -> str:
        if value not in ("curve", "bvp"):
            raise ValueError(f"must be 'curve' or 'bvp', got {value!r}")
        return value

    @field_validator("expect")
    @classmethod
    def _expect(cls, value: str) -> str:
        if value not in ("pass", "fail", "any"):
            raise ValueError(f"must be 'pass', 'fail' or 'any', got {value!r}")
        return value


class DbrSection(_Section):
    f: Optional[str] = "0"
    g: Optional[str] = "1"
    f_file: Optional[str] = None
    g_file: Optional[str] = None
    variations: int = 50
    tol: float = 1e-10
    expect: str = "any"

    @field_validator("f", "g")
    @classmethod
    def _parse(cls, value: Optional[str]) -> Optional[str]:
        return _check_field_expression(value)

    @field_validator("expect")
    @classmethod
    def _expect(cls, value: str) -> str:
        if value not in ("constant", "nonconstant", "any"):
            raise ValueError(f"must be 'constant', 'nonconstant' or 'any', got {value!r}")
        return value


class WeakSection(_Section):
    density: Optional[str] = "cos(t)*sin(x)"
    curve_file: Optional[str] = None
    trials: int = 20
    tol: float = 1e-12

    @field_validator("density")
    @classmethod
    def _parse(cls, value: Optional[str]) -> Optional[str]:
        return _check_field_expression(value)


class LadderSection(_Section):
    N: List[int] = [16, 32, 64, 128]
    M: List[int] = [16, 32, 64, 128]
    mode: str = "residual"
    min_slope: Optional[float] = None

    @field_validator("N", "M", mode="before")
    @classmethod
    def _list(cls, value: object) -> object:
        return _split_list(value)

    @field_validator("N")
    @classmethod
    def _powers(cls, values: List[int]) -> List[int]:
        bad = [n for n in values if not is_power_of_two(n) or n < MIN_GRID_NODES]
        if bad:
            raise ValueError(f"entries must be powers of two >= {MIN_GRID_NODES}, got {bad}")
        return values

    @field_validator("mode")
    @classmethod
    def _mode(cls, value: str) -> str:
        if value not in ("residual", "ivp"):
            raise ValueError(f"must be 'residual' or 'ivp', got {value!r}")
        return value


class RunConfig(BaseModel):
    """A validated run configuration."""

    model_config = ConfigDict(extra="forbid")

    lagrangian: LagrangianSection = LagrangianSection()
    grid: GridSection = GridSection()
    time: TimeSection = TimeSection()
    quadrature: QuadratureSection = QuadratureSection()
    diff: DiffSection = DiffSection()
    run: RunSection = RunSection()
    curve: CurveSection = CurveSection()
    initial: InitialSection = InitialSection()
    boundary: BoundarySection = BoundarySection()
    solver: SolverSection = SolverSection()
    verify: VerifySection = VerifySection()
    dbr: DbrSection = DbrSection()
    weak: WeakSection = WeakSection()
    ladder: LadderSection = LadderSection()

    source: Optional[str] = None

    def with_seed(self, seed: int) -> "RunConfig":
        return self.model_copy(update={"run": self.run.model_copy(update={"seed": seed})})

    def make_grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.grid.N, self.grid.m)

    def make_time(self) -> TimeGrid:
        return TimeGrid(self.time.a, self.time.b, self.time.M)

    def make_quadrature(self) -> Quadrature:
        return Quadrature(self.quadrature.rule, self.quadrature.points)

    def make_diff(self) -> DiffConfig:
        return DiffConfig(
            self.diff.backend, self.diff.fd_step, self.diff.fd_floor, self.diff.fd_order
        )

    def make_lagrangian(self) -> LagrangianSpec:
        section = self.lagrangian
        return build_lagrangian(
            section.kind,
            omega=section.omega,
            c=section.c,
            beta=section.beta,
            expression=section.expression,
            symbolic=section.symbolic,
            stencil_order=self.diff.stencil_order,
        )

    def make_exact(self) -> ExactSolution:
        return exact_solution_from_config(self.curve.descriptor())

    def make_solver_options(self) -> BVPOptions:
        section = self.solver
        return BVPOptions(
            section.max_iterations,
            section.gtol,
            section.line_search,
            section.inner_maxiter,
            section.divergence,
        )

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.run.seed)

    def resolve(self, path: str) -> Path:
        """Resolve ``path`` relative to the configuration file."""
        candidate = Path(os.path.expanduser(path))
        if not candidate.is_absolute() and self.source:
            candidate = Path(self.source).parent / candidate
        return candidate


def _field_name(error: Mapping[str, object]) -> str:
    return ".".join(str(part) for part in error.get("loc", ()))  # type: ignore[union-attr]


def validate_and_normalize_config(raw: Mapping[str, Mapping[str, str]], source: Optional[str] = None) -> RunConfig:
    """Validate raw ``section -> key -> text`` values into a :class:`RunConfig`."""

    data: Dict[str, object] = {name: dict(values) for name, values in raw.items()}
    unknown = sorted(set(data) - set(RunConfig.model_fields) - {"source"})
    if unknown:
        raise ConfigurationError(unknown[0], "unknown section")
    try:
        config = RunConfig.model_validate({**data, "source": source})
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigurationError(_field_name(first), str(first["msg"])) from exc

    if config.quadrature.rule == "simpson" and config.time.M % 2:
        raise ConfigurationError("time.M", f"composite Simpson needs an even M, got {config.time.M}")
    if not config.time.b > config.time.a:
        raise ConfigurationError("time.b", f"must exceed a={config.time.a}, got {config.time.b}")
    if config.lagrangian.kind.lower().startswith("user") and not config.lagrangian.expression:
        raise ConfigurationError("lagrangian.expression", "a user Lagrangian needs a density expression")
    builders = (
        ("lagrangian", config.make_lagrangian),
        ("diff", config.make_diff),
        ("curve", config.make_exact),
        ("solver", config.make_solver_options),
    )
    for name, build in builders:
        try:
            build()
        except ConfigurationError:
            raise
        except ValueError as exc:
            raise ConfigurationError(name, str(exc)) from exc

    if config.diff.backend == "analytic" and not config.make_lagrangian().has_analytic_densities:
        raise ConfigurationError(
            "diff.backend",
            "lagrangian.symbolic = false leaves no closed-form densities; "
            "set backend = finite-difference",
        )

    for section, key in (("dbr", "f_file"), ("dbr", "g_file"), ("weak", "curve_file")):
        value = getattr(getattr(config, section), key)
        if value and not config.resolve(value).exists():
            raise ConfigurationError(f"{section}.{key}", f"file {value!r} does not exist")
    return config


def read_config_file(path: Path) -> Dict[str, Dict[str, str]]:
    """Read ``key = value`` lines grouped under ``[section]`` headers."""

    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#",)
    )
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigurationError("config", f"cannot parse {path}: {exc}") from exc
    return {name: dict(parser.items(name)) for name in parser.sections()}


def load_configuration(config_path: str | None = None) -> RunConfig:
    if config_path:
        path_str = os.path.expanduser(str(config_path))
    else:
        path_str = DEFAULT_CONFIG_PATH_STR

    logger.info("Loading configuration from: %s", path_str)

    if not os.path.exists(path_str):
        raise ConfigurationError("config", f"configuration file '{path_str}' does not exist")

    raw = read_config_file(Path(path_str))
    config = validate_and_normalize_config(raw, source=path_str)
    logger.debug("Configuration loaded successfully.")
    return config
