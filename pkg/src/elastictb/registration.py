"""Pairwise elastic alignment of SRSFs by dynamic programming.

The amplitude distance between two functions is

    d_a(f1, f2) = inf_gamma || q1 - (q2 o gamma) sqrt(gamma') ||,

minimized here over piecewise-linear warps on the full T x T lattice.  Path
segments advance (a, b) grid steps with co-prime a, b in 1..3, so local
slopes lie in [1/3, 3] and any number of them can be mixed.  Each segment's
cost is the trapezoid rule applied to the squared residual along the
segment, which makes the total path cost the exact trapezoid-rule value of
the L2 residual for that warp; the DP optimum is therefore the global
optimum over the whole lattice path family.

Segment costs are precomputed in vectorized form (q2 is tabulated on a
six-fold refined grid so every fractional index the segments need is an
exact lookup), which keeps a full 101 x 101 alignment around a millisecond.
"""

from __future__ import annotations

import numpy as np

from .errors import SizeError
from .srsf import (
    SampledFunction,
    Srsf,
    WarpingFunction,
    normalize_domain,
    resample,
    to_srsf,
    uniform_grid,
)

__all__ = [
    "SLOPE_SEGMENTS",
    "WARP_INVARIANCE_TOL",
    "pairwise_align",
    "amplitude_distance",
]

# (a, b) = steps along the t-axis and the gamma-axis.  The identity-slope
# segment comes first so cost ties resolve toward the diagonal.
SLOPE_SEGMENTS: tuple[tuple[int, int], ...] = (
    (1, 1),
    (1, 2),
    (2, 1),
    (1, 3),
    (3, 1),
    (2, 3),
    (3, 2),
)

# Empirical bound on |d_a(f1 o g1, f2 o g2) - d_a(f1, f2)| for this lattice
# at T = 101 on smooth bimodal test data with slope-e warps; the continuum
# distance is exactly invariant, the lattice pays a discretization cost.
# Measured max over seeded trial families was 0.028 (distances of order 1).
WARP_INVARIANCE_TOL = 0.035

_REFINE = 6  # lcm of the segment step sizes; makes all lookups exact


def _uniform_delta(grid: np.ndarray) -> float:
    steps = np.diff(grid)
    delta = (grid[-1] - grid[0]) / (grid.size - 1)
    if not np.allclose(steps, delta, rtol=1e-9, atol=1e-12):
        raise SizeError("dynamic-programming alignment needs a uniform grid")
    return float(delta)


def _segment_costs(q1: np.ndarray, q2: np.ndarray, delta: float) -> list[np.ndarray | None]:
    """Trapezoid cost of every lattice segment, one table per segment type."""
    T = q1.size
    fine = np.interp(np.arange(_REFINE * (T - 1) + 1) / _REFINE, np.arange(T), q2)
    tables: list[np.ndarray | None] = []
    for a, b in SLOPE_SEGMENTS:
        ni, nj = T - a, T - b
        if ni < 1 or nj < 1:
            tables.append(None)
            continue
        scale = np.sqrt(b / a)
        weights = np.full(a + 1, delta)
        weights[0] = weights[-1] = 0.5 * delta
        cost = np.zeros((ni, nj))
        stride = (_REFINE * b) // a
        for r in range(a + 1):
            left = q1[r : r + ni]
            right = fine[r * stride : r * stride + _REFINE * (nj - 1) + 1 : _REFINE]
            cost += weights[r] * (left[:, None] - scale * right[None, :]) ** 2
        tables.append(cost)
    return tables


def pairwise_align(q1: Srsf, q2: Srsf) -> tuple[WarpingFunction, float]:
    """Optimal warp of `q2` onto `q1` and the resulting amplitude distance.

    Both SRSFs must share one uniform grid.  Returns the minimizing warp
    ``gamma`` (so ``warp_srsf(q2, gamma)`` is the aligned version of `q2`)
    together with ``d_a = || q1 - (q2 o gamma) sqrt(gamma') ||``.
    """
    if q1.grid.shape != q2.grid.shape or not np.allclose(q1.grid, q2.grid, atol=1e-12):
        raise SizeError("SRSFs must share a common grid for alignment")
    grid = q1.grid
    delta = _uniform_delta(grid)
    T = grid.size
    tables = _segment_costs(q1.q, q2.q, delta)

    dist = np.full((T, T), np.inf)
    choice = np.full((T, T), -1, dtype=np.int8)
    dist[0, 0] = 0.0
    for i in range(1, T):
        row = dist[i]
        for k, (a, b) in enumerate(SLOPE_SEGMENTS):
            table = tables[k]
            if table is None or i < a:
                continue
            cand = dist[i - a, : T - b] + table[i - a]
            view = row[b:]
            better = cand < view
            view[better] = cand[better]
            choice[i, b:][better] = k

    total = dist[T - 1, T - 1]
    # The all-diagonal path always exists, so the end node is reachable.
    i = j = T - 1
    knots_i, knots_j = [i], [j]
    while i > 0 or j > 0:
        a, b = SLOPE_SEGMENTS[choice[i, j]]
        i -= a
        j -= b
        knots_i.append(i)
        knots_j.append(j)
    knots_i.reverse()
    knots_j.reverse()
    gamma = np.interp(grid, grid[knots_i], grid[knots_j])
    return WarpingFunction(grid, gamma), float(np.sqrt(max(total, 0.0)))


def amplitude_distance(
    f1: SampledFunction, f2: SampledFunction, grid_size: int = 101
) -> float:
    """Elastic amplitude distance between two functions.

    Domains are normalized to [0, 1] and both functions are resampled to a
    common uniform grid before the SRSF alignment.
    """
    out: list[Srsf] = []
    grid = uniform_grid(grid_size)
    for f in (f1, f2):
        if not f.unit_domain:
            f = normalize_domain(f.grid, f.values)
        out.append(to_srsf(resample(f, grid)))
    return pairwise_align(out[0], out[1])[1]
