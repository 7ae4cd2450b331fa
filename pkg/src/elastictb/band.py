"""Bootstrapped geometric tolerance bands for amplitude and phase.

Bands come from resampling the fitted joint PCA model: each bootstrap
replicate draws a sample, splits it into aligned SRSFs and warps, and
takes geometric quantiles of each part (a geometric median plus rank
quantiles along the first residual direction).  Replicate quantile
curves are then aggregated in two steps.  A pointwise confidence
quantile across the S replicate curves (on SRSF values for amplitude,
on warp values for phase) fixes how far out each bound sits, measured
as its distance from the band median.  The reported bound is then the
replicate quantile curve with the smallest distance at or beyond that
target, so bounds stay genuine sample curves: pointwise composites of
crossing curves are not function estimates anyone observed, and their
pullbacks can take shapes no sample member has.  Rounding outward keeps
the bounds conservative; a single replicate reproduces its own
quantiles exactly.

Band membership is judged in the geometry the bounds are built from: a
function is inside when its amplitude (or phase) distance from the band
median does not exceed the distance of the bound on its side.  This is
the same coordinate the surface display uses, and it is how the band and
a function are compared by the coverage experiment.

Conventions: ``coverage_p`` is the tail mass outside the bounds (0.01
means 99% coverage) and ``confidence_alpha`` the aggregation tail (0.05
means 95% confidence).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import partial

import numpy as np

from .config import parallel_map, rng_stream
from .errors import SizeError
from .fpca import JointFpcaModel, JointVector, decompose_sample, draw_from_model
from .registration import pairwise_align
from .sphere import (
    SqrtDensity,
    from_psi,
    inv_exp_map,
    karcher_median_psi,
    log_rows,
    phase_distance,
    to_psi,
    trapezoid_weights,
)
from .srsf import (
    SampledFunction,
    Srsf,
    WarpingFunction,
    from_srsf,
    invert_warp,
    l2_inner,
    l2_norm,
    warp_srsf,
)

__all__ = [
    "ToleranceBand",
    "SurfacePlotData",
    "BandCoverageReport",
    "amplitude_quantiles",
    "phase_quantiles",
    "bootstrap_bands",
    "amplitude_inside",
    "warp_inside",
    "surface_coords",
    "observed_pair",
    "coverage_experiment",
]

# Substream namespaces so band replicates and coverage draws never share
# random streams even under a common seed.
_BAND_SPACE = 1
_COVERAGE_SPACE = 2


@dataclass(frozen=True, eq=False)
class ToleranceBand:
    """Tolerance bounds for the amplitude and phase of a function sample.

    Amplitude bounds are reported in function space and phase bounds in
    warp space; the SRSF forms of the amplitude curves are kept for
    distance computations.  ``amplitude_span`` and ``phase_span`` record
    how far the lower and upper bounds sit from the band median in
    elastic amplitude distance and in arc length; membership tests and
    the surface display both read them.
    """

    grid: np.ndarray
    amplitude_lower: SampledFunction
    amplitude_median: SampledFunction
    amplitude_upper: SampledFunction
    phase_lower: WarpingFunction
    phase_median: WarpingFunction
    phase_upper: WarpingFunction
    amplitude_lower_srsf: Srsf
    amplitude_median_srsf: Srsf
    amplitude_upper_srsf: Srsf
    amplitude_span: tuple[float, float]
    phase_span: tuple[float, float]
    coverage_p: float
    confidence_alpha: float
    bootstrap_s: int
    per_replicate_n: int
    seed: int
    degenerate: bool = False

    def __post_init__(self):
        if not 0.0 < self.coverage_p < 1.0:
            raise SizeError("coverage_p must lie strictly between 0 and 1")
        if not 0.0 < self.confidence_alpha < 1.0:
            raise SizeError("confidence_alpha must lie strictly between 0 and 1")
        if self.bootstrap_s < 1 or self.per_replicate_n < 1:
            raise SizeError("bootstrap_s and per_replicate_n must be positive")
        for span in (self.amplitude_span, self.phase_span):
            if len(span) != 2 or any(s < 0.0 for s in span):
                raise SizeError("spans must be pairs of nonnegative distances")


@dataclass(frozen=True, eq=False)
class SurfacePlotData:
    """Flattened coordinates of a band for surface-style display.

    Curves sit at axis positions 0, d(lower, median), and
    d(lower, median) + d(median, upper) in the relevant metric, so the
    spacing between the sheets shows how wide the band is geometrically.
    """

    mode: str
    positions: np.ndarray
    grid: np.ndarray
    curves: np.ndarray  # rows: lower, median, upper

    def __post_init__(self):
        if self.mode not in ("amplitude", "phase"):
            raise SizeError("mode must be 'amplitude' or 'phase'")
        positions = np.asarray(self.positions, dtype=float)
        curves = np.asarray(self.curves, dtype=float)
        if positions.shape != (3,) or np.any(np.diff(positions) < -1e-12):
            raise SizeError("positions must be 3 nondecreasing reals")
        if curves.shape != (3, np.asarray(self.grid).size):
            raise SizeError("curves must be 3 rows on the grid")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "curves", curves)


@dataclass(frozen=True)
class BandCoverageReport:
    """Estimated confidence that a band captures its nominal coverage."""

    coverage: float  # nominal fraction inside, e.g. 0.90
    confidences: tuple[float, ...]
    amplitude_rate: tuple[float, ...]
    phase_rate: tuple[float, ...]
    replicates: int
    draws_per_replicate: int


def _flat_median(grid: np.ndarray, rows: np.ndarray, tol: float = 1e-6,
                 max_iter: int = 50) -> np.ndarray:
    """Geometric median in L2 by the Weiszfeld iteration."""
    weights = trapezoid_weights(grid)
    mu = rows.mean(axis=0)
    for _ in range(max_iter):
        d = np.maximum(np.sqrt(((rows - mu) ** 2) @ weights), 1e-10)
        new = (rows / d[:, None]).sum(axis=0) / (1.0 / d).sum()
        step = l2_norm(grid, new - mu)
        mu = new
        if step <= tol:
            break
    return mu


def _principal_direction(rows: np.ndarray) -> np.ndarray | None:
    """First right singular vector of a residual matrix, sign-stabilized."""
    scale = float(np.max(np.abs(rows), initial=0.0))
    if scale <= 1e-14:
        return None
    _, s, vt = np.linalg.svd(rows, full_matrices=False)
    if s[0] <= 1e-12 * max(scale, 1.0):
        return None
    u = vt[0]
    peak = np.argmax(np.abs(u))
    return -u if u[peak] < 0.0 else u


def _rank_pick(members: list[int], dists: np.ndarray, p: float) -> int:
    """Index of the rank-quantile member of one side, farthest ranked first.

    The pick sits ``ceil((p/2) * n_side)`` in from the extreme end, which
    reproduces the quartile construction at p = 0.5 and reaches for the
    most extreme member as p drops toward 0.
    """
    order = sorted(members, key=lambda i: (-dists[i], i))
    rank = min(max(math.ceil(0.5 * p * len(members)), 1), len(members))
    return order[rank - 1]


def amplitude_quantiles(
    qs: list[Srsf], coverage_p: float
) -> tuple[Srsf, Srsf, Srsf]:
    """Geometric (lower, median, upper) amplitude quantiles of an SRSF sample.

    The median is the L2 geometric median; the sample is split into sides
    by the sign of each residual's projection on the first residual
    direction, and each side contributes its rank-quantile member by
    elastic distance from the median.  Outputs are sample members (except
    the median).  An empty side collapses that bound onto the median.
    """
    grid = qs[0].grid
    rows = np.stack([q.q for q in qs])
    med = _flat_median(grid, rows)
    residuals = rows - med
    direction = _principal_direction(residuals)
    median = Srsf(grid, med)
    if direction is None:
        return qs[0], median, qs[0]
    projections = residuals @ direction
    dists = np.array([pairwise_align(median, q)[1] for q in qs])
    lower_side = [i for i in range(len(qs)) if projections[i] < 0.0]
    upper_side = [i for i in range(len(qs)) if projections[i] >= 0.0]
    lower = qs[_rank_pick(lower_side, dists, coverage_p)] if lower_side else median
    upper = qs[_rank_pick(upper_side, dists, coverage_p)] if upper_side else median
    return lower, median, upper


def phase_quantiles(
    warps: list[WarpingFunction], coverage_p: float
) -> tuple[SqrtDensity, SqrtDensity, SqrtDensity]:
    """Geometric phase quantiles of a warp sample, in square-root form.

    Same construction as the amplitude side, carried out intrinsically on
    the sphere: Weiszfeld median, tangent residuals at the median, sign
    split along their first principal direction, arc-length rank
    quantiles.
    """
    psis = [to_psi(w) for w in warps]
    med = karcher_median_psi(psis)
    dists, tangents = log_rows(
        med.psi, np.stack([p.psi for p in psis]), trapezoid_weights(med.grid)
    )
    direction = _principal_direction(tangents)
    if direction is None:
        return psis[0], med, psis[0]
    projections = tangents @ direction
    lower_side = [i for i in range(len(psis)) if projections[i] < 0.0]
    upper_side = [i for i in range(len(psis)) if projections[i] >= 0.0]
    lower = psis[_rank_pick(lower_side, dists, coverage_p)] if lower_side else med
    upper = psis[_rank_pick(upper_side, dists, coverage_p)] if upper_side else med
    return lower, med, upper


def _replicate_quantiles(
    index: int,
    model: JointFpcaModel,
    per_replicate_n: int,
    coverage_p: float,
    seed: int,
) -> np.ndarray:
    """One bootstrap replicate: sample, decompose, take geometric quantiles.

    Returns a (6, T) array: the amplitude lower/median/upper quantiles as
    SRSF curves, then the phase lower/upper quantiles as warps around the
    median square-root density.
    """
    rng = rng_stream(seed, _BAND_SPACE, index)
    draws = draw_from_model(model, per_replicate_n, rng)
    qs: list[Srsf] = []
    warps: list[WarpingFunction] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # clamped draws are expected far out
        for joint in draws:
            q, w = decompose_sample(model, joint)
            qs.append(q)
            warps.append(w)
    alo, amed, aup = amplitude_quantiles(qs, coverage_p)
    plo, pmed, pup = phase_quantiles(warps, coverage_p)
    return np.stack([
        alo.q, amed.q, aup.q,
        from_psi(plo).gamma, pmed.psi, from_psi(pup).gamma,
    ])


def _aggregate(
    stacks: np.ndarray,
    model: JointFpcaModel,
    coverage_p: float,
    confidence_alpha: float,
    bootstrap_s: int,
    per_replicate_n: int,
    seed: int,
) -> ToleranceBand:
    """Confidence aggregation of replicate quantile curves.

    Pointwise confidence quantiles across the replicate curves set each
    bound's target distance from the band median (the geometric median
    of the replicate medians); the bound itself is the replicate
    quantile curve realizing that distance, rounded outward.
    """
    geometry = _pool_geometry(stacks, model.grid)
    return _band_from_geometry(
        geometry, model, coverage_p, confidence_alpha, bootstrap_s,
        per_replicate_n, seed,
    )


@dataclass(frozen=True)
class _PoolGeometry:
    """Replicate quantile curves with their distances from the pool medians."""

    stacks: np.ndarray
    median_srsf: Srsf
    psi_median: SqrtDensity
    lower_srsfs: list[Srsf]
    upper_srsfs: list[Srsf]
    amp_dists: np.ndarray  # (2, S): lower row, upper row
    phase_lowers: list[WarpingFunction]
    phase_uppers: list[WarpingFunction]
    phase_dists: np.ndarray  # (2, S)


def _pool_geometry(stacks: np.ndarray, grid: np.ndarray) -> _PoolGeometry:
    """Distances and side-consistent labels for a replicate quantile pool.

    Each replicate labels its own bounds by the sign convention of its
    own residual direction, which can flip between replicates.  The pool
    relabels every pair by projection onto the pool-level direction so
    that all lower bounds sit on one geometric side and all upper bounds
    on the other.
    """
    stacks = np.array(stacks)
    median_srsf = Srsf(grid, _flat_median(grid, stacks[:, 1, :]))
    psi_median = karcher_median_psi(
        [SqrtDensity(grid, row) for row in stacks[:, 4, :]]
    )
    res_lo = stacks[:, 0, :] - median_srsf.q
    res_up = stacks[:, 2, :] - median_srsf.q
    amp_dir = _principal_direction(np.vstack([res_lo, res_up]))
    if amp_dir is not None:
        swap = res_lo @ amp_dir > res_up @ amp_dir
        stacks[swap, 0, :], stacks[swap, 2, :] = (
            stacks[swap, 2, :], stacks[swap, 0, :].copy()
        )
    weights = trapezoid_weights(grid)
    psi_lo = np.stack([
        to_psi(WarpingFunction(grid, row)).psi for row in stacks[:, 3, :]
    ])
    psi_up = np.stack([
        to_psi(WarpingFunction(grid, row)).psi for row in stacks[:, 5, :]
    ])
    d_lo, v_lo = log_rows(psi_median.psi, psi_lo, weights)
    d_up, v_up = log_rows(psi_median.psi, psi_up, weights)
    phase_dir = _principal_direction(np.vstack([v_lo, v_up]))
    if phase_dir is not None:
        swap = v_lo @ phase_dir > v_up @ phase_dir
        stacks[swap, 3, :], stacks[swap, 5, :] = (
            stacks[swap, 5, :], stacks[swap, 3, :].copy()
        )
        d_lo, d_up = (np.where(swap, d_up, d_lo), np.where(swap, d_lo, d_up))
    lower_srsfs = [Srsf(grid, row) for row in stacks[:, 0, :]]
    upper_srsfs = [Srsf(grid, row) for row in stacks[:, 2, :]]
    amp_dists = np.array([
        [pairwise_align(median_srsf, q)[1] for q in lower_srsfs],
        [pairwise_align(median_srsf, q)[1] for q in upper_srsfs],
    ])
    phase_lowers = [WarpingFunction(grid, row) for row in stacks[:, 3, :]]
    phase_uppers = [WarpingFunction(grid, row) for row in stacks[:, 5, :]]
    return _PoolGeometry(
        stacks=stacks,
        median_srsf=median_srsf,
        psi_median=psi_median,
        lower_srsfs=lower_srsfs,
        upper_srsfs=upper_srsfs,
        amp_dists=amp_dists,
        phase_lowers=phase_lowers,
        phase_uppers=phase_uppers,
        phase_dists=np.array([d_lo, d_up]),
    )


def _snap_outward(dists: np.ndarray, target: float) -> int:
    """Index of the curve with the smallest distance at or beyond `target`.

    Falls back to the farthest curve when the target exceeds every
    member, so the bound never rounds inward.
    """
    beyond = dists >= target - 1e-12
    if not np.any(beyond):
        return int(np.argmax(dists))
    candidates = np.where(beyond)[0]
    return int(candidates[np.argmin(dists[candidates])])


def _band_from_geometry(
    geometry: _PoolGeometry,
    model: JointFpcaModel,
    coverage_p: float,
    confidence_alpha: float,
    bootstrap_s: int,
    per_replicate_n: int,
    seed: int,
) -> ToleranceBand:
    grid = model.grid
    stacks = geometry.stacks
    median_srsf = geometry.median_srsf
    half = 0.5 * confidence_alpha
    # Amplitude targets are the pointwise confidence sheets of each
    # side's replicate quantile curves.  Phase targets pool both sides:
    # warp tangent directions integrate to zero against the median, so
    # one side's warps cross the identity and a single-side value sheet
    # cancels to a fraction of the family's true extent.
    target_lo = pairwise_align(
        median_srsf, Srsf(grid, np.quantile(stacks[:, 0, :], half, axis=0))
    )[1]
    target_up = pairwise_align(
        median_srsf, Srsf(grid, np.quantile(stacks[:, 2, :], 1.0 - half, axis=0))
    )[1]
    weights = trapezoid_weights(grid)
    phase_family = np.vstack([stacks[:, 3, :], stacks[:, 5, :]])
    gamma_lo = np.maximum.accumulate(np.quantile(phase_family, half, axis=0))
    gamma_up = np.maximum.accumulate(
        np.quantile(phase_family, 1.0 - half, axis=0)
    )
    ptarget_lo = log_rows(
        geometry.psi_median.psi,
        to_psi(WarpingFunction(grid, gamma_lo)).psi[None, :], weights,
    )[0][0]
    ptarget_up = log_rows(
        geometry.psi_median.psi,
        to_psi(WarpingFunction(grid, gamma_up)).psi[None, :], weights,
    )[0][0]
    i_lo = _snap_outward(geometry.amp_dists[0], target_lo)
    i_up = _snap_outward(geometry.amp_dists[1], target_up)
    j_lo = _snap_outward(geometry.phase_dists[0], ptarget_lo)
    j_up = _snap_outward(geometry.phase_dists[1], ptarget_up)
    lower_srsf = geometry.lower_srsfs[i_lo]
    upper_srsf = geometry.upper_srsfs[i_up]
    # The reported phase spans are recomputed through the stored median
    # warp rather than read from the pool distances: membership can only
    # see the median as a warp, and the square-root-density round trip
    # shifts arc lengths by a few 1e-5, enough to push the band's own
    # bounds over a limit taken from the pool.
    phase_median_warp = from_psi(geometry.psi_median)
    med_psi = to_psi(phase_median_warp)
    phase_span = (
        phase_distance(med_psi, to_psi(geometry.phase_lowers[j_lo])),
        phase_distance(med_psi, to_psi(geometry.phase_uppers[j_up])),
    )
    return ToleranceBand(
        grid=grid,
        amplitude_lower=from_srsf(lower_srsf, f0=model.origin_value),
        amplitude_median=from_srsf(median_srsf, f0=model.origin_value),
        amplitude_upper=from_srsf(upper_srsf, f0=model.origin_value),
        phase_lower=geometry.phase_lowers[j_lo],
        phase_median=phase_median_warp,
        phase_upper=geometry.phase_uppers[j_up],
        amplitude_lower_srsf=lower_srsf,
        amplitude_median_srsf=median_srsf,
        amplitude_upper_srsf=upper_srsf,
        amplitude_span=(
            float(geometry.amp_dists[0][i_lo]),
            float(geometry.amp_dists[1][i_up]),
        ),
        phase_span=phase_span,
        coverage_p=coverage_p,
        confidence_alpha=confidence_alpha,
        bootstrap_s=bootstrap_s,
        per_replicate_n=per_replicate_n,
        seed=seed,
        degenerate=model.degenerate,
    )


def _replicate_pool(
    model: JointFpcaModel,
    per_replicate_n: int,
    bootstrap_s: int,
    coverage_p: float,
    seed: int,
) -> np.ndarray:
    worker = partial(
        _replicate_quantiles,
        model=model,
        per_replicate_n=per_replicate_n,
        coverage_p=coverage_p,
        seed=seed,
    )
    return np.stack(parallel_map(worker, range(bootstrap_s)))


def bootstrap_bands(
    model: JointFpcaModel,
    per_replicate_n: int = 30,
    bootstrap_s: int = 500,
    coverage_p: float = 0.01,
    confidence_alpha: float = 0.05,
    seed: int = 0,
) -> ToleranceBand:
    """Tolerance band for (1 - coverage_p) coverage at (1 - alpha) confidence.

    Runs `bootstrap_s` replicates of size `per_replicate_n` from the model,
    reduces each to geometric quantile curves, and aggregates pointwise.
    Replicates use independent substreams of `seed`, so results do not
    depend on the worker configuration.
    """
    if not 0.0 < coverage_p < 1.0 or not 0.0 < confidence_alpha < 1.0:
        raise SizeError("coverage_p and confidence_alpha must lie in (0, 1)")
    if bootstrap_s * confidence_alpha * 0.5 < 10.0:
        warnings.warn(
            f"only {bootstrap_s} replicates for an alpha/2 tail of "
            f"{0.5 * confidence_alpha:g}; the aggregated bounds will be noisy",
            RuntimeWarning,
            stacklevel=2,
        )
    stacks = _replicate_pool(model, per_replicate_n, bootstrap_s, coverage_p, seed)
    return _aggregate(
        stacks, model, coverage_p, confidence_alpha, bootstrap_s,
        per_replicate_n, seed,
    )


_SIDE_TOL = 1e-9


def _within_side(distance: float, projection: float, span: tuple[float, float],
                 direction_scale: float) -> bool:
    """Distance-sense membership: stay short of the bound on your side.

    The side is picked by projecting onto the lower-to-upper direction;
    when the band has no usable direction (degenerate or symmetric), the
    wider span applies.
    """
    if direction_scale <= 1e-12:
        return distance <= max(span) + _SIDE_TOL
    limit = span[0] if projection < 0.0 else span[1]
    return distance <= limit + _SIDE_TOL


def amplitude_inside(band: ToleranceBand, q: Srsf) -> bool:
    """Whole-function membership of an aligned SRSF in the amplitude band.

    The function is inside when its elastic amplitude distance from the
    band median is at most the distance of the bound on its side, the
    same coordinate the surface display spaces the curves by.  The band
    median itself is inside at distance zero.
    """
    med = band.amplitude_median_srsf
    direction = band.amplitude_upper_srsf.q - band.amplitude_lower_srsf.q
    scale = l2_norm(band.grid, direction)
    projection = l2_inner(band.grid, q.q - med.q, direction)
    distance = pairwise_align(med, q)[1]
    return _within_side(distance, projection, band.amplitude_span, scale)


def warp_inside(band: ToleranceBand, warp: WarpingFunction) -> bool:
    """Whole-function membership of a warp in the phase band.

    Mirrors the amplitude test on the sphere: arc length from the median
    square-root density against the bound on the warp's side, with sides
    split by the tangent direction from the lower to the upper bound.
    """
    med = to_psi(band.phase_median)
    v = inv_exp_map(med, to_psi(warp)).v
    direction = (
        inv_exp_map(med, to_psi(band.phase_upper)).v
        - inv_exp_map(med, to_psi(band.phase_lower)).v
    )
    scale = l2_norm(band.grid, direction)
    projection = l2_inner(band.grid, v, direction)
    distance = phase_distance(med, to_psi(warp))
    return _within_side(distance, projection, band.phase_span, scale)


def surface_coords(band: ToleranceBand, mode: str) -> SurfacePlotData:
    """Axis positions and curves for a surface-style rendering of a band.

    Amplitude curves are spaced by elastic amplitude distance; phase
    curves by arc length, and are displayed as deviations from the
    identity warp.
    """
    if mode == "amplitude":
        d1, d2 = band.amplitude_span
        curves = np.stack([
            band.amplitude_lower.values,
            band.amplitude_median.values,
            band.amplitude_upper.values,
        ])
    elif mode == "phase":
        d1, d2 = band.phase_span
        curves = np.stack([
            band.phase_lower.gamma - band.grid,
            band.phase_median.gamma - band.grid,
            band.phase_upper.gamma - band.grid,
        ])
    else:
        raise SizeError("mode must be 'amplitude' or 'phase'")
    positions = np.array([0.0, d1, d1 + d2])
    return SurfacePlotData(mode=mode, positions=positions, grid=band.grid,
                           curves=curves)


def observed_pair(
    model: JointFpcaModel, joint: JointVector, realign: bool = True
) -> tuple[Srsf, WarpingFunction]:
    """Decompose a draw; optionally rebuild the observation and re-align it.

    Re-alignment mimics how a fresh observation would be processed: undo
    the warp to get the observed SRSF, then align it back to the model's
    amplitude mean by dynamic programming.  With ``realign=False`` the
    draw's own decomposition is returned unchanged.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        q_aligned, warp = decompose_sample(model, joint)
    if not realign:
        return q_aligned, warp
    q_obs = warp_srsf(q_aligned, invert_warp(warp))
    mean = Srsf(model.grid, model.mean_srsf)
    warp_hat, _ = pairwise_align(mean, q_obs)
    return warp_srsf(q_obs, warp_hat), warp_hat


def _coverage_replicate(
    index: int,
    model: JointFpcaModel,
    bands: list[ToleranceBand],
    draws_per_replicate: int,
    coverage: float,
    realign: bool,
    seed: int,
) -> np.ndarray:
    """Success indicators (amplitude then phase, one per band) for one replicate.

    A replicate succeeds when the fresh sample's own geometric quantile
    curves at the nominal coverage fall inside the band: the band claims
    to bound the population quantiles, so that claim is checked against
    the sample's estimate of them.
    """
    rng = rng_stream(seed, _COVERAGE_SPACE, index)
    draws = draw_from_model(model, draws_per_replicate, rng)
    qs: list[Srsf] = []
    warps: list[WarpingFunction] = []
    for joint in draws:
        q_star, warp = observed_pair(model, joint, realign)
        qs.append(q_star)
        warps.append(warp)
    alo, _, aup = amplitude_quantiles(qs, 1.0 - coverage)
    plo, _, pup = phase_quantiles(warps, 1.0 - coverage)
    gamma_lo, gamma_up = from_psi(plo), from_psi(pup)
    amp_ok = np.array([
        amplitude_inside(band, alo) and amplitude_inside(band, aup)
        for band in bands
    ])
    phase_ok = np.array([
        warp_inside(band, gamma_lo) and warp_inside(band, gamma_up)
        for band in bands
    ])
    return np.concatenate([amp_ok, phase_ok])


def coverage_experiment(
    model: JointFpcaModel,
    coverage: float = 0.90,
    confidences: tuple[float, ...] = (0.90, 0.95, 0.99),
    replicates: int = 500,
    draws_per_replicate: int = 100,
    per_replicate_n: int = 30,
    bootstrap_s: int = 500,
    seed: int = 0,
    realign: bool = True,
) -> BandCoverageReport:
    """Estimate the confidence attained by bands at several nominal levels.

    Builds bands for `coverage` at each confidence (sharing one replicate
    pool), then repeatedly draws fresh samples from the model and counts
    how often each sample's geometric quantile curves at the nominal
    coverage fall inside the band.  With ``realign=True`` each draw is
    rebuilt as an observed function and re-aligned to the model mean,
    exercising the same path a new observation would take.
    """
    if not 0.0 < coverage < 1.0:
        raise SizeError("coverage must lie strictly between 0 and 1")
    pool = _replicate_pool(model, per_replicate_n, bootstrap_s, 1.0 - coverage, seed)
    geometry = _pool_geometry(pool, model.grid)
    bands = [
        _band_from_geometry(geometry, model, 1.0 - coverage, 1.0 - conf,
                            bootstrap_s, per_replicate_n, seed)
        for conf in confidences
    ]
    worker = partial(
        _coverage_replicate,
        model=model,
        bands=bands,
        draws_per_replicate=draws_per_replicate,
        coverage=coverage,
        realign=realign,
        seed=seed,
    )
    outcomes = np.stack(parallel_map(worker, range(replicates)))
    rates = outcomes.mean(axis=0)
    k = len(confidences)
    return BandCoverageReport(
        coverage=coverage,
        confidences=tuple(confidences),
        amplitude_rate=tuple(float(r) for r in rates[:k]),
        phase_rate=tuple(float(r) for r in rates[k:]),
        replicates=replicates,
        draws_per_replicate=draws_per_replicate,
    )
