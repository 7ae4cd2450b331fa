"""Geometry of warping functions via square-root densities.

A warp ``gamma`` is represented by ``psi = sqrt(gamma')``.  Because
``int psi^2 = gamma(1) - gamma(0) = 1``, the set of warps maps onto the
nonnegative orthant of the unit sphere in L2, where distances are arc
lengths and means are computed by the usual intrinsic (Karcher) iteration.
Tangent vectors at a mean ("shooting vectors") give a flat coordinate
system for the phase component used by the joint PCA model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, SizeError
from .srsf import Srsf, WarpingFunction, from_srsf, l2_inner, l2_norm

__all__ = [
    "SqrtDensity",
    "ShootingVector",
    "to_psi",
    "from_psi",
    "identity_psi",
    "phase_distance",
    "exp_map",
    "inv_exp_map",
    "karcher_mean_psi",
    "karcher_median_psi",
    "karcher_mean_warps",
    "WarpMeanResult",
]


def _same_grid(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape or not np.allclose(a, b, atol=1e-12):
        raise SizeError("operands are sampled on different grids")


@dataclass(frozen=True, eq=False)
class SqrtDensity:
    """Unit-norm square-root density ``psi = sqrt(gamma')`` of a warp.

    The norm constraint is validated to 1e-6.  Values are nonnegative for
    any psi arising from an actual warp; reconstructions from a fitted
    model can momentarily leave the nonnegative orthant, which
    ``decompose_sample`` clamps (and flags) before building a warp.
    """

    grid: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        psi = np.asarray(self.psi, dtype=float)
        if psi.shape != grid.shape:
            raise SizeError("psi and grid have mismatched shapes")
        nrm = l2_norm(grid, psi)
        if abs(nrm - 1.0) > 1e-6:
            raise DomainError(f"psi must have unit L2 norm, got {nrm:.8f}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "psi", psi)


@dataclass(frozen=True, eq=False)
class ShootingVector:
    """Tangent vector at a base point on the sphere of square-root densities."""

    grid: np.ndarray
    v: np.ndarray
    base: SqrtDensity

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.v, dtype=float)
        _same_grid(grid, self.base.grid)
        tangency = abs(l2_inner(grid, v, self.base.psi))
        if tangency > 1e-6 * max(1.0, l2_norm(grid, v)):
            raise DomainError(f"vector is not tangent at its base ({tangency:.2e})")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "v", v)

    def norm(self) -> float:
        return l2_norm(self.grid, self.v)


def to_psi(warp: WarpingFunction) -> SqrtDensity:
    """Square-root density of a warp, normalized to exact unit norm.

    The discrete derivative only integrates to 1 up to quadrature error, so
    the result is rescaled; without that the unit-norm invariant would drift
    at the 1e-3 level on typical grids.
    """
    slope = np.maximum(np.gradient(warp.gamma, warp.grid), 0.0)
    psi = np.sqrt(slope)
    nrm = l2_norm(warp.grid, psi)
    if nrm <= 0.0:
        raise DomainError("warp has zero total variation")
    return SqrtDensity(warp.grid, psi / nrm)


def from_psi(psi: SqrtDensity) -> WarpingFunction:
    """Integrate a square-root density back to a warp: ``gamma = int psi^2``."""
    if np.any(psi.psi < 0.0):
        raise DomainError("psi must be nonnegative to form a warp")
    gamma = from_srsf(Srsf(psi.grid, psi.psi)).values
    if gamma[-1] <= 0.0:
        raise DomainError("psi integrates to zero")
    gamma = gamma / gamma[-1]
    return WarpingFunction(psi.grid, gamma)


def identity_psi(grid: np.ndarray) -> SqrtDensity:
    """Square-root density of the identity warp (constant one)."""
    return SqrtDensity(grid, np.ones_like(np.asarray(grid, dtype=float)))


def phase_distance(a: SqrtDensity, b: SqrtDensity) -> float:
    """Arc-length distance on the sphere, ``arccos <psi1, psi2>``."""
    _same_grid(a.grid, b.grid)
    c = np.clip(l2_inner(a.grid, a.psi, b.psi), -1.0, 1.0)
    return float(np.arccos(c))


def exp_map(base: SqrtDensity, v: np.ndarray) -> SqrtDensity:
    """Follow the geodesic from `base` with initial velocity `v` for unit time."""
    v = np.asarray(v, dtype=float)
    if v.shape != base.grid.shape:
        raise SizeError("tangent vector does not match the base point's grid")
    nrm = l2_norm(base.grid, v)
    if nrm >= np.pi:
        raise DomainError(f"tangent vector of length {nrm:.4f} leaves the sphere chart")
    if nrm < 1e-14:
        return SqrtDensity(base.grid, base.psi.copy())
    psi = np.cos(nrm) * base.psi + np.sin(nrm) * (v / nrm)
    return SqrtDensity(base.grid, psi)


def inv_exp_map(base: SqrtDensity, target: SqrtDensity) -> ShootingVector:
    """Tangent vector at `base` whose exponential reaches `target`."""
    theta = phase_distance(base, target)
    if theta > np.pi - 1e-6:
        raise DomainError("antipodal points have no unique logarithm")
    if theta < 1e-12:
        return ShootingVector(base.grid, np.zeros_like(base.psi), base)
    v = (theta / np.sin(theta)) * (target.psi - np.cos(theta) * base.psi)
    return ShootingVector(base.grid, v, base)


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    """Quadrature weights making ``w @ f`` the trapezoid-rule integral."""
    steps = np.diff(grid)
    w = np.zeros_like(np.asarray(grid, dtype=float))
    w[:-1] += 0.5 * steps
    w[1:] += 0.5 * steps
    return w


def log_rows(
    mu: np.ndarray, rows: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Arc distances and tangent vectors from `mu` to each row, vectorized.

    Rows with zero distance get zero tangent vectors.  `weights` are the
    grid's trapezoid weights.
    """
    inner = np.clip((rows * mu) @ weights, -1.0, 1.0)
    theta = np.arccos(inner)
    factor = np.ones_like(theta)
    mask = theta >= 1e-12
    factor[mask] = theta[mask] / np.sin(theta[mask])
    vs = factor[:, None] * (rows - inner[:, None] * mu)
    vs[~mask] = 0.0
    return theta, vs


def _tangent_mean(
    mu: np.ndarray,
    rows: np.ndarray,
    weights: np.ndarray,
    tangent_weights: np.ndarray | None,
) -> np.ndarray:
    _, vs = log_rows(mu, rows, weights)
    if tangent_weights is None:
        return vs.mean(axis=0)
    return (tangent_weights[:, None] * vs).sum(axis=0) / tangent_weights.sum()


def karcher_mean_psi(
    psis: list[SqrtDensity],
    step: float = 0.3,
    tol: float = 1e-6,
    max_iter: int = 50,
) -> SqrtDensity:
    """Intrinsic mean on the sphere of square-root densities.

    Starts from the normalized extrinsic average and performs damped
    gradient steps until the mean tangent vector has norm at most `tol`.
    """
    if not psis:
        raise SizeError("need at least one psi")
    if len(psis) == 1:
        return psis[0]
    grid = psis[0].grid
    for p in psis[1:]:
        _same_grid(grid, p.grid)
    rows = np.stack([p.psi for p in psis])
    weights = trapezoid_weights(grid)
    avg = rows.mean(axis=0)
    mu = avg / l2_norm(grid, avg)
    residual = np.inf
    for _ in range(max_iter):
        vbar = _tangent_mean(mu, rows, weights, None)
        residual = l2_norm(grid, vbar)
        if residual <= tol:
            return SqrtDensity(grid, mu)
        mu = exp_map(SqrtDensity(grid, mu), step * vbar).psi
    raise ConvergenceError(
        f"Karcher mean did not converge in {max_iter} iterations",
        last_residual=residual,
    )


def karcher_median_psi(
    psis: list[SqrtDensity],
    step: float = 0.3,
    tol: float = 1e-6,
    max_iter: int = 50,
) -> SqrtDensity:
    """Intrinsic median: the mean iteration with inverse-distance weights.

    Follows the Weiszfeld scheme; distances are floored to avoid the
    singularity when the iterate lands on a sample point.  Returns the last
    iterate if the budget runs out (the median is used inside resampling
    loops where a best-effort answer is preferable to an abort).
    """
    if not psis:
        raise SizeError("need at least one psi")
    if len(psis) == 1:
        return psis[0]
    grid = psis[0].grid
    rows = np.stack([p.psi for p in psis])
    weights = trapezoid_weights(grid)
    avg = rows.mean(axis=0)
    mu = avg / l2_norm(grid, avg)
    for _ in range(max_iter):
        theta, vs = log_rows(mu, rows, weights)
        inv = 1.0 / np.maximum(theta, 1e-10)
        vbar = (inv[:, None] * vs).sum(axis=0) / inv.sum()
        if l2_norm(grid, vbar) <= tol:
            break
        mu = exp_map(SqrtDensity(grid, mu), step * vbar).psi
    return SqrtDensity(grid, mu)


@dataclass(frozen=True, eq=False)
class WarpMeanResult:
    """Karcher mean of a warp sample with per-warp shooting vectors."""

    warp_mean: WarpingFunction
    psi_mean: SqrtDensity
    shooting_vectors: list[ShootingVector]


def karcher_mean_warps(
    warps: list[WarpingFunction],
    step: float = 0.3,
    tol: float = 1e-6,
    max_iter: int = 50,
) -> WarpMeanResult:
    """Karcher mean of warps and the tangent coordinates of the sample.

    The shooting vectors are the logarithms of each warp's square-root
    density at the mean; by the first-order optimality of the mean they sum
    to (numerically) zero.
    """
    psis = [to_psi(w) for w in warps]
    mu = karcher_mean_psi(psis, step=step, tol=tol, max_iter=max_iter)
    vectors = [inv_exp_map(mu, p) for p in psis]
    return WarpMeanResult(from_psi(mu), mu, vectors)
