"""Tolerance bounds for functional data with amplitude and phase variability.

The package separates a sample of functions into aligned (amplitude) and
warping (phase) components through square-root slope registration, fits a
joint principal component model to both, and computes two kinds of
tolerance artifacts from that model: bootstrapped geometric tolerance
bands in the amplitude and phase spaces, and a tolerance region on the
principal coefficients with a Monte Carlo factor.

Typical use::

    from elastictb import (
        simulate_two_bump, align_sample, fit_joint_fpca, bootstrap_bands,
    )

    table = simulate_two_bump(n=21, seed=7)
    alignment = align_sample(table.as_functions())
    model = fit_joint_fpca(alignment, variance_threshold=0.9)
    band = bootstrap_bands(model, coverage_p=0.01, confidence_alpha=0.05)

The ``elastictb`` command exposes the same pipeline over files and pipes.
"""

from .band import (
    BandCoverageReport,
    SurfacePlotData,
    ToleranceBand,
    amplitude_inside,
    amplitude_quantiles,
    bootstrap_bands,
    coverage_experiment,
    phase_quantiles,
    surface_coords,
    warp_inside,
)
from .config import ExperimentConfig, rng_stream
from .datasets import (
    DatasetTable,
    read_csv,
    simulate_two_bump,
    simulate_unimodal_toy,
    write_csv,
)
from .errors import ConvergenceError, DomainError, ParseError, SizeError
from .fpca import (
    JointFpcaModel,
    JointVector,
    build_joint,
    coefficients,
    decompose_sample,
    estimate_scale_c,
    fit_joint_fpca,
    principal_path,
    sample_model,
)
from .groupwise import AlignmentResult, align_sample, amplitude_karcher_mean
from .region import (
    FpcaCoverageReport,
    ScoreSummary,
    ToleranceFactor,
    ToleranceScore,
    coverage_experiment_fpca,
    embed_function,
    score_functions,
    summarize_scores,
    tolerance_factor,
    tolerance_score,
)
from .registration import amplitude_distance, pairwise_align
from .sphere import ShootingVector, SqrtDensity, phase_distance
from .srsf import (
    SampledFunction,
    Srsf,
    WarpingFunction,
    from_srsf,
    to_srsf,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult",
    "BandCoverageReport",
    "ConvergenceError",
    "DatasetTable",
    "DomainError",
    "ExperimentConfig",
    "FpcaCoverageReport",
    "JointFpcaModel",
    "JointVector",
    "ParseError",
    "SampledFunction",
    "ScoreSummary",
    "ShootingVector",
    "SizeError",
    "SqrtDensity",
    "Srsf",
    "SurfacePlotData",
    "ToleranceBand",
    "ToleranceFactor",
    "ToleranceScore",
    "WarpingFunction",
    "align_sample",
    "amplitude_distance",
    "amplitude_inside",
    "amplitude_karcher_mean",
    "amplitude_quantiles",
    "bootstrap_bands",
    "build_joint",
    "coefficients",
    "coverage_experiment",
    "coverage_experiment_fpca",
    "decompose_sample",
    "embed_function",
    "estimate_scale_c",
    "fit_joint_fpca",
    "from_srsf",
    "pairwise_align",
    "phase_distance",
    "phase_quantiles",
    "principal_path",
    "read_csv",
    "rng_stream",
    "sample_model",
    "score_functions",
    "simulate_two_bump",
    "simulate_unimodal_toy",
    "summarize_scores",
    "surface_coords",
    "to_srsf",
    "tolerance_factor",
    "tolerance_score",
    "warp_inside",
    "write_csv",
]
