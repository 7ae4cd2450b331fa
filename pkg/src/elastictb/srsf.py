"""Sampled functions, square-root slope transforms, and warp actions.

A function observed on a grid is represented by :class:`SampledFunction`.
Its square-root slope function (SRSF) is ``q = sign(f') sqrt(|f'|)``, under
which the elastic metric on functions becomes the plain L2 metric and time
warping acts by ``(q o gamma) sqrt(gamma')``, an isometry.  This module holds
the value types and the transforms between the three representations
(function, SRSF, warp); alignment itself lives in
:mod:`elastictb.registration`.

Conventions used throughout the package:

* derivatives use centered finite differences with one-sided endpoints
  (``numpy.gradient``),
* interpolation is linear,
* integrals and inner products use the trapezoid rule on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError, SizeError

__all__ = [
    "SampledFunction",
    "Srsf",
    "WarpingFunction",
    "uniform_grid",
    "identity_warp",
    "normalize_domain",
    "resample",
    "to_srsf",
    "from_srsf",
    "apply_warp",
    "warp_srsf",
    "invert_warp",
    "compose_warps",
    "repair_warp",
    "l2_inner",
    "l2_norm",
]

# Warps flatter than this (per unit step) get redistributed by repair_warp.
FLAT_TOL = 1e-8


def _check_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1:
        raise SizeError(f"grid must be 1-d, got shape {grid.shape}")
    if grid.size < 3:
        raise SizeError(f"grid needs at least 3 points, got {grid.size}")
    if not np.all(np.isfinite(grid)):
        raise DomainError("grid contains non-finite values")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing")
    return grid


def _check_values(values: np.ndarray, grid: np.ndarray, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise SizeError(
            f"{name} has shape {values.shape} but grid has shape {grid.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise DomainError(f"{name} contains non-finite values")
    return values


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """A real function sampled on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = _check_grid(self.grid)
        values = _check_values(self.values, grid, "values")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def unit_domain(self) -> bool:
        return self.grid[0] == 0.0 and self.grid[-1] == 1.0


@dataclass(frozen=True, eq=False)
class Srsf:
    """Square-root slope representation of a function (the offset is lost)."""

    grid: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        grid = _check_grid(self.grid)
        q = _check_values(self.q, grid, "q")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "q", q)

    def norm(self) -> float:
        return l2_norm(self.grid, self.q)


@dataclass(frozen=True, eq=False)
class WarpingFunction:
    """A monotone reparameterization of [0, 1] with fixed endpoints."""

    grid: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        grid = _check_grid(self.grid)
        gamma = _check_values(self.gamma, grid, "gamma")
        if abs(grid[0]) > 1e-9 or abs(grid[-1] - 1.0) > 1e-9:
            raise DomainError("warp grid must span [0, 1]")
        if abs(gamma[0]) > 1e-9 or abs(gamma[-1] - 1.0) > 1e-9:
            raise DomainError("warp must satisfy gamma(0) = 0 and gamma(1) = 1")
        if np.any(np.diff(gamma) < -1e-12):
            raise DomainError("warp must be nondecreasing")
        # Snap endpoints and clip float dust so downstream interpolation is clean.
        gamma = np.minimum.accumulate(gamma[::-1])[::-1]
        gamma = np.clip(gamma, 0.0, 1.0)
        gamma[0], gamma[-1] = 0.0, 1.0
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "gamma", gamma)


def uniform_grid(size: int) -> np.ndarray:
    """Uniform grid of `size` points on [0, 1]."""
    if size < 3:
        raise SizeError(f"grid needs at least 3 points, got {size}")
    return np.linspace(0.0, 1.0, size)


def identity_warp(grid: np.ndarray) -> WarpingFunction:
    grid = _check_grid(grid)
    return WarpingFunction(grid, grid.copy())


def l2_inner(grid: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Trapezoid-rule inner product of two sampled functions."""
    return float(np.trapezoid(np.asarray(a) * np.asarray(b), grid))

def l2_norm(grid: np.ndarray, a: np.ndarray) -> float:
    return float(np.sqrt(max(l2_inner(grid, a, a), 0.0)))


def normalize_domain(grid: np.ndarray, values: np.ndarray) -> SampledFunction:
    """Affinely map an arbitrary compact domain onto [0, 1]."""
    grid = _check_grid(grid)
    values = _check_values(values, grid, "values")
    span = grid[-1] - grid[0]
    out = (grid - grid[0]) / span
    out[0], out[-1] = 0.0, 1.0
    return SampledFunction(out, values.copy())


def resample(f: SampledFunction, grid: np.ndarray) -> SampledFunction:
    """Linearly interpolate a function onto a new grid within its domain."""
    grid = _check_grid(grid)
    if grid[0] < f.grid[0] - 1e-12 or grid[-1] > f.grid[-1] + 1e-12:
        raise DomainError("target grid extends beyond the function's domain")
    return SampledFunction(grid, np.interp(grid, f.grid, f.values))


def _smoothed(values: np.ndarray, passes: int) -> np.ndarray:
    """Repeated 3-point moving average with endpoints held fixed."""
    v = values.copy()
    for _ in range(passes):
        inner = 0.25 * v[:-2] + 0.5 * v[1:-1] + 0.25 * v[2:]
        v[1:-1] = inner
    return v


def to_srsf(f: SampledFunction, smooth: int = 0) -> Srsf:
    """Square-root slope transform ``q = sign(f') sqrt(|f'|)``.

    Parameters
    ----------
    f : SampledFunction
    smooth : int
        Number of 3-point moving-average passes applied to the values before
        differentiation.  Off by default; raw data with jagged sampling may
        benefit from 1-2 passes.
    """
    values = _smoothed(f.values, smooth) if smooth > 0 else f.values
    slope = np.gradient(values, f.grid)
    return Srsf(f.grid, np.sign(slope) * np.sqrt(np.abs(slope)))


def from_srsf(q: Srsf, f0: float = 0.0) -> SampledFunction:
    """Invert the square-root slope transform: ``f = f0 + int q |q|``."""
    integrand = q.q * np.abs(q.q)
    values = f0 + cumulative_trapezoid(integrand, q.grid, initial=0.0)
    return SampledFunction(q.grid, values)


def apply_warp(f: SampledFunction, warp: WarpingFunction) -> SampledFunction:
    """Compose a function with a warp: ``(f o gamma)(t) = f(gamma(t))``."""
    if not f.unit_domain:
        raise DomainError("apply_warp needs a function on [0, 1]; normalize first")
    values = np.interp(warp.gamma, f.grid, f.values)
    return SampledFunction(warp.grid, values)


def warp_srsf(q: Srsf, warp: WarpingFunction) -> Srsf:
    """Isometric warp action on an SRSF: ``(q o gamma) sqrt(gamma')``."""
    slope = np.maximum(np.gradient(warp.gamma, warp.grid), 0.0)
    values = np.interp(warp.gamma, q.grid, q.q) * np.sqrt(slope)
    return Srsf(warp.grid, values)


def repair_warp(grid: np.ndarray, gamma: np.ndarray) -> WarpingFunction:
    """Build a strictly increasing warp from near-monotone values.

    Flat spots (steps below ``FLAT_TOL`` per unit of grid) are redistributed
    by mixing in a small multiple of the identity, then the result is rescaled
    back onto [0, 1].
    """
    grid = _check_grid(grid)
    gamma = np.asarray(gamma, dtype=float)
    gamma = np.maximum.accumulate(gamma)
    steps = np.diff(gamma) / np.diff(grid)
    if np.any(steps < FLAT_TOL):
        gamma = gamma + FLAT_TOL * grid
    gamma = gamma - gamma[0]
    gamma = gamma / gamma[-1]
    return WarpingFunction(grid, gamma)


def invert_warp(warp: WarpingFunction) -> WarpingFunction:
    """Inverse warp on the same grid, by exchanging axes and re-interpolating."""
    gamma = warp.gamma
    if np.any(np.diff(gamma) <= 0):
        gamma = repair_warp(warp.grid, gamma).gamma
    values = np.interp(warp.grid, gamma, warp.grid)
    return WarpingFunction(warp.grid, values)


def compose_warps(outer: WarpingFunction, inner: WarpingFunction) -> WarpingFunction:
    """Composition ``(outer o inner)(t) = outer(inner(t))`` on inner's grid."""
    values = np.interp(inner.gamma, outer.grid, outer.gamma)
    return WarpingFunction(inner.grid, values)
