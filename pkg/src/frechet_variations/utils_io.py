"""Plain-text readers and writers for grid functions, curves and tables.

Grid functions are stored as a one-line header ``# N m period`` followed by N
rows of m values. Curves (dual or primal) use the seven-field header
``# <kind> N m period a b M`` followed by M+1 rows, each a time value and the
N·m node values in row-major order. Numbers are written with ``%.17g`` so a
read after a write reproduces every double exactly.
"""

from __future__ import annotations

from pathlib import Path
from typing import IO, List, Mapping, Type, TypeVar

import numpy as np
import pandas as pd

from .errors import PreconditionError
from .function_space import GridFunction, PeriodicGrid
from .weak_integral import DualCurve, PrimalCurve, SampledCurve, TimeGrid

FLOAT_FORMAT = "%.17g"
CURVE_TAGS = {DualCurve: "dual-curve", PrimalCurve: "primal-curve"}

GRID_FUNCTION_FIELDS = 3
CURVE_FIELDS = 7

C = TypeVar("C", DualCurve, PrimalCurve)


def _read_header(path: Path) -> List[str]:
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first.startswith("#"):
        raise PreconditionError(f"{path}: missing '#' header line")
    return first.lstrip("#").split()


def write_grid_function(u: GridFunction, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"{u.grid.n} {u.grid.m} {u.grid.period!r}"
    np.savetxt(path, u.values, fmt=FLOAT_FORMAT, header=header, encoding="utf-8")


def read_grid_function(path: Path) -> GridFunction:
    fields = _read_header(path)
    if len(fields) == CURVE_FIELDS:
        raise PreconditionError(f"{path}: holds a {fields[0]}, not a grid function")
    if len(fields) != GRID_FUNCTION_FIELDS:
        raise PreconditionError(
            f"{path}: a grid-function header has {GRID_FUNCTION_FIELDS} fields, got {len(fields)}"
        )
    grid = PeriodicGrid(int(fields[0]), int(fields[1]), float(fields[2]))
    values = np.loadtxt(path, ndmin=2, encoding="utf-8")
    return GridFunction(grid, values.reshape(grid.shape))


def write_curve(curve: SampledCurve, path: Path) -> None:
    """Write a dual or primal curve with a leading time column."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tag = CURVE_TAGS.get(type(curve), "primal-curve")
    grid, time = curve.grid, curve.time
    header = (
        f"{tag} {grid.n} {grid.m} {grid.period!r} {time.a!r} {time.b!r} {time.M}"
    )
    rows = np.column_stack(
        [time.nodes, curve.samples.reshape(time.M + 1, grid.n * grid.m)]
    )
    np.savetxt(path, rows, fmt=FLOAT_FORMAT, header=header, encoding="utf-8")


def read_curve(path: Path, cls: Type[C]) -> C:
    header = _read_header(path)
    if len(header) != CURVE_FIELDS or header[0] != CURVE_TAGS[cls]:
        raise PreconditionError(f"{path}: not a {CURVE_TAGS[cls]} file")
    fields = header[1:]
    grid = PeriodicGrid(int(fields[0]), int(fields[1]), float(fields[2]))
    time = TimeGrid(float(fields[3]), float(fields[4]), int(fields[5]))
    rows = np.loadtxt(path, ndmin=2, encoding="utf-8")
    if rows.shape != (time.M + 1, 1 + grid.n * grid.m):
        raise PreconditionError(f"{path}: expected {time.M + 1} rows of {1 + grid.n * grid.m} values")
    samples = rows[:, 1:].reshape((time.M + 1,) + grid.shape)
    return cls(time, grid, samples)


def read_dual_curve(path: Path) -> DualCurve:
    return read_curve(path, DualCurve)


def write_table(frame: pd.DataFrame, path: Path) -> None:
    """CSV with a header row and fixed float formatting."""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def format_value(value: object) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


def write_summary(values: Mapping[str, object], stream: IO[str]) -> None:
    """Emit ``key,value`` lines for a run summary."""
    for key, value in values.items():
        stream.write(f"{key},{format_value(value)}\n")
