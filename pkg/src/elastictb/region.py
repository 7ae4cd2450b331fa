"""Tolerance regions on the joint principal-coefficient space.

Whereas the band module resamples whole curves, this module works
directly with the Gaussian model on the principal coefficients: a
tolerance factor ``b`` defines the ellipsoidal region
``{x : (n-1) x' A^{-1} x <= b}`` (the coefficient mean is zero by
construction), and each function is reduced to a scalar tolerance score
that is compared against ``b``.

Convention note: here ``coverage_p`` is the covered mass (0.99 means the
region should contain 99% of the population), the opposite tail
convention from the band module, matching how each construction is
usually parameterized.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.stats import chi2

from .band import observed_pair
from .config import parallel_map, rng_stream
from .errors import DomainError, SizeError
from .fpca import (
    JointFpcaModel,
    JointVector,
    coefficients,
    draw_from_model,
    joint_of,
)
from .registration import pairwise_align
from .srsf import (
    SampledFunction,
    Srsf,
    normalize_domain,
    resample,
    to_srsf,
    warp_srsf,
)

__all__ = [
    "ToleranceFactor",
    "ToleranceScore",
    "ScoreSummary",
    "FpcaCoverageReport",
    "tolerance_factor",
    "tolerance_score",
    "embed_function",
    "score_functions",
    "summarize_scores",
    "coverage_experiment_fpca",
]

# Substream namespaces (1 and 2 belong to the band module).
_FACTOR_SPACE = 3
_SCORE_SPACE = 4


@dataclass(frozen=True)
class ToleranceFactor:
    """Cutoff for the coefficient-space tolerance region.

    `coverage_p` is the covered proportion (e.g. 0.99) and
    `confidence_beta` the confidence that the region really covers it.
    """

    b: float
    dim_k: int
    sample_n: int
    coverage_p: float
    confidence_beta: float
    mc_iterations: int
    seed: int

    def __post_init__(self):
        if not self.b > 0.0:
            raise SizeError("tolerance factor must be positive")
        if self.mc_iterations < 10_000:
            raise SizeError("a tolerance factor needs at least 10,000 draws")


@dataclass(frozen=True)
class ToleranceScore:
    """One function's squared standardized distance from the model mean."""

    score: float
    inside: bool

    def __post_init__(self):
        if not (math.isfinite(self.score) and self.score >= 0.0):
            raise SizeError("score must be a nonnegative real")


@dataclass(frozen=True, eq=False)
class ScoreSummary:
    """Sample statistics of a batch of tolerance scores."""

    mean: float
    sd: float
    bin_edges: np.ndarray
    bin_counts: np.ndarray


@dataclass(frozen=True)
class FpcaCoverageReport:
    """Estimated confidence that the region captures its nominal coverage."""

    coverage: float
    confidences: tuple[float, ...]
    rate: tuple[float, ...]
    factors: tuple[float, ...]
    replicates: int
    draws_per_replicate: int


def _wishart_eigenvalues(
    k: int, df: int, iters: int, rng: np.random.Generator
) -> np.ndarray:
    """Eigenvalues of `iters` draws from a Wishart(df, identity) in dim k."""
    t = np.zeros((iters, k, k))
    rows, cols = np.tril_indices(k, -1)
    if rows.size:
        t[:, rows, cols] = rng.standard_normal((iters, rows.size))
    t[:, np.arange(k), np.arange(k)] = np.sqrt(
        rng.chisquare(df - np.arange(k), size=(iters, k))
    )
    return np.linalg.eigvalsh(t @ np.transpose(t, (0, 2, 1)))


def _factor_draws(
    k: int, n: int, p: float, iters: int, rng: np.random.Generator
) -> np.ndarray:
    """Per-draw factors b* whose region holds content p given the draw.

    Each draw simulates the sufficient statistics of a size-n normal
    sample in canonical position: eigenvalues of the scatter matrix and
    an independent sample mean.  Conditional on the draw, the squared
    standardized distance of a new observation is a weighted sum of
    noncentral chi-squares; its p-quantile is evaluated by matching three
    moments to a shifted, scaled chi-square.  The match is exact in the
    large-n limit, where it collapses to the chi-square quantile itself.
    """
    eigs = _wishart_eigenvalues(k, n - 1, iters, rng)
    delta = rng.standard_normal((iters, k)) ** 2 / n
    a = (n - 1.0) / eigs
    k1 = (a * (1.0 + delta)).sum(axis=1)
    k2 = 2.0 * (a**2 * (1.0 + 2.0 * delta)).sum(axis=1)
    k3 = 8.0 * (a**3 * (1.0 + 3.0 * delta)).sum(axis=1)
    dof = 8.0 * k2**3 / k3**2
    scale = k3 / (4.0 * k2)
    shift = k1 - 2.0 * k2**2 / k3
    return shift + scale * chi2.ppf(p, dof)


def tolerance_factor(
    n: int,
    k: int,
    p: float = 0.99,
    beta: float = 0.95,
    mc_iterations: int = 100_000,
    seed: int = 0,
) -> ToleranceFactor:
    """Monte Carlo tolerance factor for a k-variate normal, sample size n.

    The returned `b` satisfies (approximately) the defining condition:
    with probability `beta` over the sampling of mean and scatter, the
    region ``(n-1) x' A^{-1} x <= b`` contains at least proportion `p`
    of the population.  `b` is the beta-quantile of the per-draw
    factors; deterministic for a fixed seed.
    """
    if k < 1 or n < k + 2:
        raise DomainError(f"need n >= k + 2, got n = {n}, k = {k}")
    if not 0.0 < p < 1.0 or not 0.0 < beta < 1.0:
        raise SizeError("p and beta must lie strictly between 0 and 1")
    if mc_iterations < 10_000:
        raise SizeError("a tolerance factor needs at least 10,000 draws")
    draws = _factor_draws(k, n, p, mc_iterations, rng_stream(seed, _FACTOR_SPACE))
    return ToleranceFactor(
        b=float(np.quantile(draws, beta)),
        dim_k=k,
        sample_n=n,
        coverage_p=p,
        confidence_beta=beta,
        mc_iterations=mc_iterations,
        seed=seed,
    )


def _raw_score(model: JointFpcaModel, joint: JointVector) -> float:
    if model.degenerate:
        return 0.0
    if np.any(model.variances <= 0.0):
        raise DomainError("model retains a component with zero variance")
    c = coefficients(model, joint)
    return float(np.sum(c * c / model.variances))


def tolerance_score(
    model: JointFpcaModel, joint: JointVector, factor: ToleranceFactor
) -> ToleranceScore:
    """Score one joint vector against a tolerance factor.

    The score is the squared coefficient distance standardized by the
    per-axis variances, which equals ``(n-1) c' A^{-1} c`` for the
    diagonal coefficient model.  A degenerate (zero-variance) model
    scores everything 0.
    """
    score = _raw_score(model, joint)
    return ToleranceScore(score=score, inside=bool(score <= factor.b))


def embed_function(
    model: JointFpcaModel, f: SampledFunction, smooth: int = 0
) -> JointVector:
    """Run a raw function through the model's alignment pipeline.

    The function is mapped onto the model grid, transformed to its SRSF,
    aligned to the model's amplitude mean, and embedded with the warp's
    tangent coordinates at the phase mean.
    """
    g = resample(normalize_domain(f.grid, f.values), model.grid)
    q = to_srsf(g, smooth=smooth)
    warp, _ = pairwise_align(Srsf(model.grid, model.mean_srsf), q)
    return joint_of(model, warp_srsf(q, warp), warp)


def score_functions(
    model: JointFpcaModel,
    functions: list[SampledFunction],
    factor: ToleranceFactor,
    smooth: int = 0,
) -> list[ToleranceScore]:
    """Embed and score a batch of raw functions against a factor."""
    return [
        tolerance_score(model, embed_function(model, f, smooth=smooth), factor)
        for f in functions
    ]


def summarize_scores(
    model: JointFpcaModel, joints: list[JointVector]
) -> ScoreSummary:
    """Mean, standard deviation, and histogram of a batch of scores."""
    if not joints:
        raise SizeError("need at least one joint vector to summarize")
    scores = np.array([_raw_score(model, j) for j in joints])
    sd = float(scores.std(ddof=1)) if scores.size > 1 else 0.0
    counts, edges = np.histogram(scores, bins="auto")
    return ScoreSummary(
        mean=float(scores.mean()), sd=sd, bin_edges=edges, bin_counts=counts
    )


def _region_replicate(
    index: int,
    model: JointFpcaModel,
    factors: np.ndarray,
    draws_per_replicate: int,
    coverage: float,
    realign: bool,
    seed: int,
) -> np.ndarray:
    """Success indicators (one per factor) for one fresh-sample replicate.

    A replicate succeeds when the fresh sample's score quantile at the
    nominal coverage stays below the factor, checking the region's claim
    against the sample's own quantile estimate.
    """
    rng = rng_stream(seed, _SCORE_SPACE, index)
    draws = draw_from_model(model, draws_per_replicate, rng)
    scores = np.empty(draws_per_replicate)
    for i, joint in enumerate(draws):
        if realign:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                q_star, warp = observed_pair(model, joint, realign=True)
                joint = joint_of(model, q_star, warp)
        scores[i] = _raw_score(model, joint)
    return np.quantile(scores, coverage) <= factors + 1e-12


def coverage_experiment_fpca(
    model: JointFpcaModel,
    coverage: float = 0.90,
    confidences: tuple[float, ...] = (0.90, 0.95, 0.99),
    replicates: int = 500,
    draws_per_replicate: int = 100,
    mc_iterations: int = 100_000,
    seed: int = 0,
    realign: bool = True,
) -> FpcaCoverageReport:
    """Estimate the confidence attained by the region at nominal levels.

    Tolerance factors for content `coverage` at each confidence share one
    Monte Carlo pool (a factor is just a quantile of the per-draw
    factors).  Each replicate then draws a fresh sample from the model
    and succeeds if at least `coverage` of the draws score within the
    factor.  With ``realign=True`` each draw is rebuilt as an observed
    function and re-aligned before scoring, as a new observation would
    be.
    """
    if not 0.0 < coverage < 1.0:
        raise SizeError("coverage must lie strictly between 0 and 1")
    if model.sample_size < model.retained_k + 2:
        raise DomainError(
            f"factor needs n >= k + 2, got n = {model.sample_size}, "
            f"k = {model.retained_k}"
        )
    pool = _factor_draws(
        model.retained_k,
        model.sample_size,
        coverage,
        mc_iterations,
        rng_stream(seed, _FACTOR_SPACE),
    )
    factors = np.array([np.quantile(pool, conf) for conf in confidences])
    worker = partial(
        _region_replicate,
        model=model,
        factors=factors,
        draws_per_replicate=draws_per_replicate,
        coverage=coverage,
        realign=realign,
        seed=seed,
    )
    outcomes = np.stack(parallel_map(worker, range(replicates)))
    return FpcaCoverageReport(
        coverage=coverage,
        confidences=tuple(confidences),
        rate=tuple(float(r) for r in outcomes.mean(axis=0)),
        factors=tuple(float(b) for b in factors),
        replicates=replicates,
        draws_per_replicate=draws_per_replicate,
    )
