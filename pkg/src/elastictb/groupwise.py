"""Groupwise alignment of a function sample to its amplitude mean.

Separates each observed function into an aligned (amplitude) part and a
warp (phase) part by iterating pairwise alignment against a running mean
SRSF.  After convergence the warps are centered so their Karcher mean is
the identity, which puts the phase sample's tangent coordinates at the
origin; the joint PCA model in :mod:`elastictb.fpca` relies on that.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import SizeError
from .registration import pairwise_align
from .sphere import (
    ShootingVector,
    SqrtDensity,
    karcher_mean_warps,
)
from .srsf import (
    SampledFunction,
    Srsf,
    WarpingFunction,
    apply_warp,
    compose_warps,
    invert_warp,
    l2_norm,
    normalize_domain,
    resample,
    to_srsf,
    uniform_grid,
    warp_srsf,
)

__all__ = ["AlignmentResult", "amplitude_karcher_mean", "align_sample"]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    """Output of groupwise alignment.

    ``aligned_srsfs[i]`` is ``(q_i o gamma_i) sqrt(gamma_i')`` for the
    returned ``warps[i]``, so the isometry of the warp action holds exactly
    in this representation; ``aligned_functions[i]`` is ``f_i o gamma_i``
    computed directly from the function values.
    """

    grid: np.ndarray
    aligned_functions: list[SampledFunction]
    aligned_srsfs: list[Srsf]
    warps: list[WarpingFunction]
    amplitude_mean: Srsf
    warp_mean_psi: SqrtDensity
    shooting_vectors: list[ShootingVector]
    converged: bool

    @property
    def sample_size(self) -> int:
        return len(self.aligned_srsfs)

    def origin_value(self) -> float:
        """Mean starting value of the aligned functions (for SRSF pullbacks)."""
        return float(np.mean([f.values[0] for f in self.aligned_functions]))


def _medoid_index(qs: list[Srsf]) -> int:
    """Index of the SRSF minimizing the summed L2 distance to the others."""
    grid = qs[0].grid
    n = len(qs)
    totals = np.zeros(n)
    for i in range(n):
        for j in range(i + 1, n):
            d = l2_norm(grid, qs[i].q - qs[j].q)
            totals[i] += d
            totals[j] += d
    return int(np.argmin(totals))


def amplitude_karcher_mean(
    qs: list[Srsf],
    tol: float = 1e-4,
    max_iter: int = 20,
) -> tuple[Srsf, list[WarpingFunction], list[Srsf], bool]:
    """Karcher mean of SRSFs under the warp group action.

    Starting from the sample medoid, alternates aligning every SRSF to the
    current mean with replacing the mean by the average of the aligned
    sample, until the mean moves less than `tol` in L2.  If the iteration
    budget runs out the best iterate is returned with the converged flag
    set to False (and a log warning) rather than aborting: downstream
    consumers can still use the decomposition.

    Returns ``(mean, warps, aligned, converged)``.
    """
    if not qs:
        raise SizeError("need at least one SRSF")
    grid = qs[0].grid
    for q in qs[1:]:
        if q.grid.shape != grid.shape or not np.allclose(q.grid, grid, atol=1e-12):
            raise SizeError("SRSFs must share a common grid")
    if len(qs) == 1:
        warp, _ = pairwise_align(qs[0], qs[0])
        return qs[0], [warp], [qs[0]], True

    mean = qs[_medoid_index(qs)]
    warps: list[WarpingFunction] = []
    aligned: list[Srsf] = []
    converged = False
    for _ in range(max_iter):
        warps = []
        aligned = []
        for q in qs:
            warp, _ = pairwise_align(mean, q)
            warps.append(warp)
            aligned.append(warp_srsf(q, warp))
        new_mean = Srsf(grid, np.mean([a.q for a in aligned], axis=0))
        change = l2_norm(grid, new_mean.q - mean.q)
        mean = new_mean
        if change <= tol:
            converged = True
            break
    if not converged:
        log.warning(
            "amplitude mean did not settle within %d iterations; using last iterate",
            max_iter,
        )
    return mean, warps, aligned, converged


def align_sample(
    functions: list[SampledFunction],
    grid_size: int = 101,
    center: bool = True,
    smooth: int = 0,
    tol: float = 1e-4,
    max_iter: int = 20,
) -> AlignmentResult:
    """Align a sample of functions and decompose it into amplitude and phase.

    Functions may arrive on arbitrary grids; all are normalized to [0, 1]
    and resampled to a common uniform grid of `grid_size` points.  With
    ``center=True`` (the default) the warps are recentered by the inverse of
    their Karcher mean so the phase sample averages to the identity warp.
    """
    if not functions:
        raise SizeError("need at least one function")
    grid = uniform_grid(grid_size)
    resampled = []
    for f in functions:
        if not f.unit_domain:
            f = normalize_domain(f.grid, f.values)
        resampled.append(resample(f, grid))
    qs = [to_srsf(f, smooth=smooth) for f in resampled]

    mean, warps, aligned, converged = amplitude_karcher_mean(
        qs, tol=tol, max_iter=max_iter
    )

    if center and len(functions) > 1:
        mean_warp = karcher_mean_warps(warps).warp_mean
        unshift = invert_warp(mean_warp)
        warps = [compose_warps(w, unshift) for w in warps]
        aligned = [warp_srsf(q, w) for q, w in zip(qs, warps)]
        mean = Srsf(grid, np.mean([a.q for a in aligned], axis=0))

    phase = karcher_mean_warps(warps)
    aligned_functions = [apply_warp(f, w) for f, w in zip(resampled, warps)]
    return AlignmentResult(
        grid=grid,
        aligned_functions=aligned_functions,
        aligned_srsfs=aligned,
        warps=warps,
        amplitude_mean=mean,
        warp_mean_psi=phase.psi_mean,
        shooting_vectors=phase.shooting_vectors,
        converged=converged,
    )
