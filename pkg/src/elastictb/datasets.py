"""Synthetic data generators and the delimited table format.

The CSV layout is one grid column followed by one column per function:

    t,f1,f2
    0.0,1.2,0.9
    0.5,1.4,1.1
    1.0,0.8,0.7

The header row is optional; without it columns are labeled f1, f2, ...
Parse failures report 1-based line numbers.  Values are written with 17
significant digits so a write/read round trip reproduces doubles exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .config import rng_stream
from .errors import ParseError, SizeError
from .srsf import SampledFunction, normalize_domain

__all__ = [
    "DatasetTable",
    "read_csv",
    "write_csv",
    "simulate_two_bump",
    "simulate_unimodal_toy",
]


@dataclass(frozen=True, eq=False)
class DatasetTable:
    """A sample of functions observed on one shared grid."""

    grid: np.ndarray
    functions: np.ndarray  # shape (n, len(grid))
    labels: list[str]

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        functions = np.asarray(self.functions, dtype=float)
        if grid.ndim != 1 or grid.size < 3:
            raise SizeError("grid must be 1-d with at least 3 points")
        if functions.ndim != 2 or functions.shape[1] != grid.size:
            raise SizeError(
                f"functions must have shape (n, {grid.size}), got {functions.shape}"
            )
        if functions.shape[0] < 1:
            raise SizeError("table must contain at least one function")
        if len(self.labels) != functions.shape[0]:
            raise SizeError("labels must match the number of functions")
        if len(set(self.labels)) != len(self.labels):
            raise ParseError("duplicate function labels")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "functions", functions)

    @property
    def sample_size(self) -> int:
        return int(self.functions.shape[0])

    def as_functions(self) -> list[SampledFunction]:
        return [SampledFunction(self.grid, row) for row in self.functions]


def _parse_row(cells: list[str], line: int, width: int) -> list[float]:
    if len(cells) != width:
        raise ParseError(f"expected {width} fields, got {len(cells)}", line=line)
    out = []
    for k, cell in enumerate(cells):
        try:
            out.append(float(cell))
        except ValueError:
            raise ParseError(f"field {k + 1} is not numeric: {cell!r}", line=line)
    return out


def read_csv(stream: TextIO) -> DatasetTable:
    """Parse a delimited function table from a text stream."""
    reader = csv.reader(stream)
    labels: list[str] | None = None
    rows: list[list[float]] = []
    width = 0
    first_data_line = 0
    for line, cells in enumerate(reader, start=1):
        cells = [c.strip() for c in cells]
        if not any(cells):
            raise ParseError("empty row", line=line)
        if labels is None and not rows:
            numeric = True
            try:
                [float(c) for c in cells]
            except ValueError:
                numeric = False
            if not numeric:
                if len(cells) < 2:
                    raise ParseError("header needs a grid column plus labels", line=line)
                labels = cells[1:]
                width = len(cells)
                continue
        if not rows:
            width = width or len(cells)
            first_data_line = line
        rows.append(_parse_row(cells, line, width))
        t_now = rows[-1][0]
        if len(rows) > 1 and t_now <= rows[-2][0]:
            raise ParseError(
                f"grid value {t_now!r} does not increase", line=line
            )
    if len(rows) < 3:
        raise ParseError(
            "need at least 3 grid rows", line=first_data_line or 1
        )
    if width < 2:
        raise ParseError("need a grid column plus at least one function column",
                         line=first_data_line)
    data = np.asarray(rows, dtype=float)
    if labels is None:
        labels = [f"f{k}" for k in range(1, width)]
    return DatasetTable(data[:, 0], data[:, 1:].T, labels)


def write_csv(table: DatasetTable, stream: TextIO) -> None:
    """Write a function table; inverse of :func:`read_csv`."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["t", *table.labels])
    for k in range(table.grid.size):
        row = [table.grid[k], *table.functions[:, k]]
        writer.writerow([f"{v:.17g}" for v in row])


def _bump_warp(u: np.ndarray, a: float) -> np.ndarray:
    """Exponential-family warp of [-3, 3]; reduces to the identity at a = 0."""
    if a == 0.0:
        return u.copy()
    return 6.0 * (np.exp(a * (u + 3.0) / 6.0) - 1.0) / (np.exp(a) - 1.0) - 3.0


def simulate_two_bump(
    n: int = 21,
    seed: int = 0,
    grid_size: int = 301,
    z_sd: float = 0.25,
    a_max: float = 1.0,
) -> DatasetTable:
    """Bimodal sample with independent height and timing variability.

    Each curve is ``y_i(t) = z_i1 exp(-(t - 1.5)^2 / 2) +
    z_i2 exp(-(t + 1.5)^2 / 2)`` on [-3, 3] with heights
    ``z ~ N(1, z_sd^2)``, composed with an exponential warp whose parameter
    runs over `n` equally spaced values in ``[-a_max, a_max]``.  The warp
    is applied analytically and the domain is then rescaled to [0, 1].
    Deterministic for a fixed seed.
    """
    if n < 1:
        raise SizeError("n must be positive")
    rng = rng_stream(seed)
    z = 1.0 + z_sd * rng.standard_normal((n, 2))
    a_values = np.linspace(-a_max, a_max, n) if n > 1 else np.array([0.0])
    u = np.linspace(-3.0, 3.0, grid_size)
    curves = np.empty((n, grid_size))
    for i in range(n):
        w = _bump_warp(u, float(a_values[i]))
        curves[i] = (
            z[i, 0] * np.exp(-0.5 * (w - 1.5) ** 2)
            + z[i, 1] * np.exp(-0.5 * (w + 1.5) ** 2)
        )
    grid = normalize_domain(u, u).grid
    return DatasetTable(grid, curves, [f"f{k}" for k in range(1, n + 1)])


def simulate_unimodal_toy(
    n: int = 29,
    seed: int = 0,
    grid_size: int = 301,
    z_sd: float = 0.05,
    a_sd: float = 1.25,
) -> DatasetTable:
    """Unimodal sample with random peak heights and locations.

    ``y_i(t) = z_i exp(-(t - a_i)^2 / 2)`` on [0, 1] with
    ``z ~ N(1, z_sd^2)`` and ``a ~ N(0, a_sd^2)``.  A small demonstration
    set whose cross-sectional mean understates the peak height until the
    sample is aligned.
    """
    if n < 1:
        raise SizeError("n must be positive")
    rng = rng_stream(seed)
    z = 1.0 + z_sd * rng.standard_normal(n)
    a = a_sd * rng.standard_normal(n)
    t = np.linspace(0.0, 1.0, grid_size)
    curves = z[:, None] * np.exp(-0.5 * (t[None, :] - a[:, None]) ** 2)
    return DatasetTable(t, curves, [f"f{k}" for k in range(1, n + 1)])
