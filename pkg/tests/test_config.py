"""Tests for configuration loading and validation."""

import unittest
from pathlib import Path
from textwrap import dedent

import numpy as np
import pytest

from frechet_variations.config import (
    RunConfig,
    field_curve,
    field_values,
    get_config_dir,
    load_configuration,
    read_config_file,
    validate_and_normalize_config,
)
from frechet_variations.errors import ConfigurationError
from frechet_variations.function_space import PeriodicGrid
from frechet_variations.lagrangian import HarmonicField, UserDensity
from frechet_variations.weak_integral import TimeGrid

SAMPLES = Path(__file__).resolve().parent.parent / "config" / "config-sample"
GOOD_SAMPLES = sorted(p for p in SAMPLES.glob("*.cfg") if not p.name.startswith("bad_"))


def write_cfg(directory: Path, text: str, name: str = "run.cfg") -> Path:
    path = directory / name
    path.write_text(dedent(text), encoding="utf-8")
    return path


@pytest.mark.parametrize("path", GOOD_SAMPLES, ids=lambda p: p.stem)
def test_sample_configurations_validate(path):
    config = load_configuration(str(path))
    assert isinstance(config, RunConfig)
    assert config.source == str(path)
    config.make_lagrangian()
    config.make_time()


def test_config_dir_is_in_the_repository():
    assert get_config_dir() == SAMPLES.parent


def test_defaults_without_sections():
    config = validate_and_normalize_config({})
    assert config.grid.N == 16 and config.grid.m == 1
    assert config.time.M == 64
    assert config.quadrature.rule == "simpson"
    assert config.run.seed == 0
    assert config.make_lagrangian().kind == "free-particle"


def test_keys_are_case_sensitive(tmp_path):
    path = write_cfg(
        tmp_path,
        """
        [grid]
        N = 32
        m = 2

        [time]
        M = 16
        """,
    )
    raw = read_config_file(path)
    assert raw["grid"] == {"N": "32", "m": "2"}
    config = validate_and_normalize_config(raw)
    assert config.make_grid() == PeriodicGrid(32, 2)
    assert config.make_time() == TimeGrid(0.0, 1.0, 16)


def test_inline_comments_are_stripped(tmp_path):
    path = write_cfg(
        tmp_path,
        """
        [lagrangian]
        kind = harmonic   # oscillator
        omega = 2.0
        """,
    )
    config = validate_and_normalize_config(read_config_file(path))
    assert config.make_lagrangian() == HarmonicField(omega=2.0)


def test_ladder_lists_are_parsed():
    config = validate_and_normalize_config({"ladder": {"N": "16, 32,64", "M": "8"}})
    assert config.ladder.N == [16, 32, 64]
    assert config.ladder.M == [8]


def test_user_lagrangian_uses_the_stencil_order():
    config = validate_and_normalize_config(
        {
            "lagrangian": {"kind": "user", "expression": "0.5*e^2 - 0.5*ux^2"},
            "diff": {"stencil_order": "2"},
        }
    )
    lagrangian = config.make_lagrangian()
    assert isinstance(lagrangian, UserDensity)
    assert lagrangian.stencil_order == 2


def test_with_seed_keeps_other_sections():
    config = validate_and_normalize_config({"grid": {"N": "64"}, "run": {"seed": "3"}})
    reseeded = config.with_seed(99)
    assert reseeded.run.seed == 99
    assert reseeded.grid.N == 64
    assert config.run.seed == 3
    assert reseeded.rng().integers(1000) == np.random.default_rng(99).integers(1000)


def test_resolve_is_relative_to_the_config_file(tmp_path):
    config = validate_and_normalize_config({}, source=str(tmp_path / "run.cfg"))
    assert config.resolve("curve.txt") == tmp_path / "curve.txt"
    assert config.resolve("/abs/curve.txt") == Path("/abs/curve.txt")


def test_missing_file_is_a_configuration_error(tmp_path):
    with pytest.raises(ConfigurationError) as info:
        load_configuration(str(tmp_path / "absent.cfg"))
    assert info.value.field == "config"


def test_unparsable_file_is_a_configuration_error(tmp_path):
    path = tmp_path / "broken.cfg"
    path.write_text("N = 16\n", encoding="utf-8")
    with pytest.raises(ConfigurationError) as info:
        load_configuration(str(path))
    assert info.value.field == "config"


def test_field_values_broadcast_and_split():
    grid = PeriodicGrid(8, 2)
    single = field_values("sin(x)", grid)
    assert single.shape == (8, 2)
    assert np.array_equal(single[:, 0], single[:, 1])
    split = field_values("1; cos(x)", grid)
    assert np.allclose(split[:, 0], 1.0)
    assert np.allclose(split[:, 1], np.cos(grid.nodes))
    with pytest.raises(ConfigurationError) as info:
        field_values("1; 2; 3", grid, field="initial.u")
    assert info.value.field == "initial.u"


def test_field_curve_depends_on_time():
    grid = PeriodicGrid(8)
    time = TimeGrid(0.0, 1.0, 4)
    curve = field_curve("t*cos(x)", time, grid)
    assert np.allclose(curve.samples[:, :, 0], np.outer(time.nodes, np.cos(grid.nodes)))


class TestConfigValidation(unittest.TestCase):
    """Each invalid value is reported against the key that caused it."""

    def assertField(self, raw, field, source=None):
        with self.assertRaises(ConfigurationError) as ctx:
            validate_and_normalize_config(raw, source=source)
        self.assertEqual(ctx.exception.field, field)

    def test_odd_steps_with_simpson(self):
        raw = read_config_file(SAMPLES / "bad_odd_simpson.cfg")
        self.assertField(raw, "time.M")

    def test_odd_steps_with_trapezoid_are_fine(self):
        config = validate_and_normalize_config(
            {"time": {"M": "33"}, "quadrature": {"rule": "Trapezoid"}}
        )
        self.assertEqual(config.make_quadrature().rule, "trapezoid")

    def test_grid_size_must_be_a_power_of_two(self):
        self.assertField({"grid": {"N": "12"}}, "grid.N")
        self.assertField({"grid": {"N": "4"}}, "grid.N")

    def test_reversed_interval(self):
        self.assertField({"time": {"a": "1", "b": "0"}}, "time.b")

    def test_unknown_section_and_key(self):
        self.assertField({"lagrangain": {}}, "lagrangain")
        self.assertField({"grid": {"n": "16"}}, "grid.n")

    def test_unknown_quadrature_rule(self):
        self.assertField({"quadrature": {"rule": "romberg"}}, "quadrature.rule")

    def test_negative_parameters(self):
        self.assertField({"lagrangian": {"kind": "harmonic", "omega": "-1"}}, "lagrangian.omega")

    def test_unknown_lagrangian_kind(self):
        self.assertField({"lagrangian": {"kind": "maxwell"}}, "lagrangian.kind")

    def test_user_lagrangian_without_expression(self):
        self.assertField({"lagrangian": {"kind": "user"}}, "lagrangian.expression")

    def test_numeric_user_density_needs_finite_differences(self):
        numeric = {"kind": "user", "expression": "0.5*e^2", "symbolic": "false"}
        self.assertField({"lagrangian": numeric}, "diff.backend")
        config = validate_and_normalize_config(
            {"lagrangian": numeric, "diff": {"backend": "finite-difference"}}
        )
        self.assertFalse(config.make_lagrangian().has_analytic_densities)

    def test_curve_rejects_misspelled_keys(self):
        self.assertField({"curve": {"kind": "harmonic", "omgea": "2"}}, "curve.omgea")

    def test_solver_settings(self):
        self.assertField({"solver": {"line_search": "backtrack"}}, "solver.line_search")
        self.assertField({"solver": {"divergence": "0.5"}}, "solver.divergence")
        self.assertField({"solver": {"armijo": "1e-4"}}, "solver.armijo")

    def test_bad_density_expression(self):
        self.assertField(
            {"lagrangian": {"kind": "user", "expression": "0.5*e^^2"}}, "lagrangian.expression"
        )

    def test_bad_initial_data(self):
        self.assertField({"initial": {"u": "sin(y)"}}, "initial.u")

    def test_seed_range(self):
        self.assertField({"run": {"seed": "-1"}}, "run.seed")
        self.assertField({"run": {"seed": str(2**64)}}, "run.seed")

    def test_unknown_curve_kind(self):
        self.assertField({"curve": {"kind": "spiral"}}, "curve.kind")

    def test_finite_difference_settings(self):
        self.assertField({"diff": {"backend": "complex-step"}}, "diff.backend")
        self.assertField({"diff": {"fd_order": "3"}}, "diff.fd_order")

    def test_missing_data_file(self):
        self.assertField({"dbr": {"f_file": "nope.txt"}}, "dbr.f_file", source="/tmp/run.cfg")

    def test_verify_and_ladder_choices(self):
        self.assertField({"verify": {"mode": "galerkin"}}, "verify.mode")
        self.assertField({"ladder": {"mode": "spectral"}}, "ladder.mode")
        self.assertField({"ladder": {"N": "16, 24, 32"}}, "ladder.N")


def test_curve_descriptor_carries_only_the_keys_that_were_set():
    config = validate_and_normalize_config(
        {"curve": {"kind": "harmonic", "omega": "3", "tol": "1e-6"}}
    )
    assert config.curve.descriptor() == {"kind": "harmonic", "omega": "3"}
    assert config.make_exact().omega == 3.0
    assert config.curve.tol == 1e-6


def test_solver_and_verify_sections_reach_the_solver():
    config = validate_and_normalize_config(
        {
            "solver": {"max_iterations": "7", "gtol": "1e-8", "line_search": "none"},
            "verify": {"mode": "pairing"},
        }
    )
    options = config.make_solver_options()
    assert (options.max_iterations, options.gtol, options.search) == (7, 1e-8, None)
    assert config.verify.mode == "eq6"
