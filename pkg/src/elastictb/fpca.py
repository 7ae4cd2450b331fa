"""Joint principal component analysis of amplitude and phase.

After groupwise alignment each observation is a pair: an aligned SRSF
``q*`` and a warp, represented by its shooting vector ``v`` at the phase
mean.  Stacking ``[q*, C v]`` gives one Euclidean vector per observation,
where the scale ``C`` balances the two blocks (by default it equates
their total variances).  Ordinary PCA of those vectors yields a single
basis capturing correlated amplitude and phase variation, and a diagonal
Gaussian model on the coefficients supports sampling, tolerance bands,
and tolerance factors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SizeError
from .groupwise import AlignmentResult
from .sphere import SqrtDensity, exp_map, from_psi, inv_exp_map, to_psi
from .srsf import SampledFunction, Srsf, WarpingFunction, from_srsf, l2_norm
from .config import rng_stream

__all__ = [
    "JointVector",
    "JointFpcaModel",
    "PhaseClampWarning",
    "estimate_scale_c",
    "build_joint",
    "fit_joint_fpca",
    "coefficients",
    "principal_path",
    "sample_model",
    "decompose_sample",
    "joint_of",
]


class PhaseClampWarning(RuntimeWarning):
    """A reconstructed square-root density left the nonnegative orthant."""


@dataclass(frozen=True, eq=False)
class JointVector:
    """One observation in the joint space: aligned SRSF plus shooting vector.

    ``phase`` holds the unscaled tangent coordinates; the block scale is
    applied when vectors are stacked for covariance work.
    """

    grid: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    scale_c: float

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        amplitude = np.asarray(self.amplitude, dtype=float)
        phase = np.asarray(self.phase, dtype=float)
        if amplitude.shape != grid.shape or phase.shape != grid.shape:
            raise SizeError("joint vector blocks must match the grid length")
        if not self.scale_c > 0.0:
            raise SizeError("scale_c must be positive")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "amplitude", amplitude)
        object.__setattr__(self, "phase", phase)

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.amplitude, self.scale_c * self.phase])


@dataclass(frozen=True, eq=False)
class JointFpcaModel:
    """Fitted joint PCA model with a diagonal Gaussian on the coefficients.

    `basis` rows live in the scaled joint space (amplitude block first);
    `variances` are the coefficient variances of the retained components,
    `spectrum` the full positive spectrum for diagnostics.  `mean_srsf` is
    the amplitude mean; the phase-block mean is identically zero because
    shooting vectors are taken at their own Karcher mean.
    """

    grid: np.ndarray
    mean_srsf: np.ndarray
    basis: np.ndarray
    variances: np.ndarray
    spectrum: np.ndarray
    scale_c: float
    warp_mean_psi: np.ndarray
    origin_value: float
    sample_size: int
    degenerate: bool = False

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        T = grid.size
        basis = np.asarray(self.basis, dtype=float)
        variances = np.asarray(self.variances, dtype=float)
        if basis.ndim != 2 or basis.shape[1] != 2 * T:
            raise SizeError("basis rows must have length 2 * len(grid)")
        if variances.shape != (basis.shape[0],):
            raise SizeError("variances must match the number of basis rows")
        if np.any(variances < 0.0) or np.any(np.diff(variances) > 1e-12):
            raise SizeError("variances must be nonnegative and nonincreasing")
        if not self.scale_c > 0.0:
            raise SizeError("scale_c must be positive")
        if self.sample_size < 1:
            raise SizeError("sample_size must be positive")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "spectrum", np.asarray(self.spectrum, dtype=float))
        object.__setattr__(self, "mean_srsf", np.asarray(self.mean_srsf, dtype=float))
        object.__setattr__(
            self, "warp_mean_psi", np.asarray(self.warp_mean_psi, dtype=float)
        )

    @property
    def retained_k(self) -> int:
        return int(self.basis.shape[0])

    def mean_joint(self) -> np.ndarray:
        return np.concatenate([self.mean_srsf, np.zeros(self.grid.size)])

    def psi_mean(self) -> SqrtDensity:
        return SqrtDensity(self.grid, self.warp_mean_psi)


def estimate_scale_c(alignment: AlignmentResult) -> float:
    """Block scale equating total amplitude and phase variance.

    ``C = sqrt(trace(cov q*) / trace(cov v))``; returns 1 when the phase
    sample carries (numerically) no variance, e.g. identical warps.
    """
    if alignment.sample_size < 2:
        return 1.0
    amp = np.stack([q.q for q in alignment.aligned_srsfs])
    ph = np.stack([sv.v for sv in alignment.shooting_vectors])
    amp_trace = float(amp.var(axis=0, ddof=1).sum())
    ph_trace = float(ph.var(axis=0, ddof=1).sum())
    if ph_trace <= 1e-12 * max(amp_trace, 1.0):
        return 1.0
    return float(np.sqrt(amp_trace / ph_trace))


def build_joint(
    alignment: AlignmentResult, scale_c: float | None = None
) -> list[JointVector]:
    """Joint vectors for an aligned sample, with the block scale resolved."""
    c = estimate_scale_c(alignment) if scale_c is None else float(scale_c)
    if not c > 0.0:
        raise SizeError("scale_c must be positive")
    return [
        JointVector(alignment.grid, q.q.copy(), sv.v.copy(), c)
        for q, sv in zip(alignment.aligned_srsfs, alignment.shooting_vectors)
    ]


def _oriented(rows: np.ndarray) -> np.ndarray:
    """Flip basis rows so the largest-magnitude entry is positive."""
    out = rows.copy()
    for row in out:
        peak = np.argmax(np.abs(row))
        if row[peak] < 0.0:
            row *= -1.0
    return out


def fit_joint_fpca(
    alignment: AlignmentResult,
    variance_threshold: float = 0.90,
    n_components: int | None = None,
    scale_c: float | None = None,
) -> JointFpcaModel:
    """Fit the joint PCA model to an aligned sample.

    The component count is the smallest k whose cumulative explained
    variance reaches `variance_threshold`, unless `n_components` fixes it.
    A sample with (numerically) zero joint variance yields a single
    zero-variance component flagged as degenerate.
    """
    n = alignment.sample_size
    if n < 2:
        raise SizeError("joint PCA needs at least 2 functions")
    if not 0.0 < variance_threshold <= 1.0:
        raise SizeError("variance_threshold must lie in (0, 1]")
    joints = build_joint(alignment, scale_c)
    T = alignment.grid.size
    X = np.stack([j.stacked() for j in joints])
    mean = np.concatenate([X[:, :T].mean(axis=0), np.zeros(T)])
    Xc = X - mean

    _, svals, Vt = np.linalg.svd(Xc, full_matrices=False)
    lams = svals**2 / (n - 1)
    scale = max(1.0, float(np.mean(np.sum(X**2, axis=1))))
    degenerate = lams.size == 0 or lams[0] <= 1e-12 * scale
    if degenerate:
        spectrum = lams[:1]
        basis = _oriented(Vt[:1])
        k = 1
    else:
        keep = lams > 1e-12 * lams[0]
        spectrum = lams[keep]
        basis = _oriented(Vt[: spectrum.size])
        if n_components is not None:
            if n_components > spectrum.size:
                raise SizeError(
                    f"{n_components} components requested, only "
                    f"{spectrum.size} available"
                )
            k = int(n_components)
        else:
            fractions = np.cumsum(spectrum) / spectrum.sum()
            k = int(np.argmax(fractions >= variance_threshold - 1e-12)) + 1

    return JointFpcaModel(
        grid=alignment.grid,
        mean_srsf=mean[:T].copy(),
        basis=basis[:k],
        variances=spectrum[:k],
        spectrum=spectrum,
        scale_c=joints[0].scale_c,
        warp_mean_psi=alignment.warp_mean_psi.psi.copy(),
        origin_value=alignment.origin_value(),
        sample_size=n,
        degenerate=bool(degenerate),
    )


def coefficients(model: JointFpcaModel, joint: JointVector) -> np.ndarray:
    """Principal coefficients of one joint vector under the model."""
    if joint.grid.size != model.grid.size:
        raise SizeError("joint vector grid does not match the model grid")
    centered = joint.stacked() - model.mean_joint()
    return model.basis @ centered


def _tangent_to_warp(
    model: JointFpcaModel, v: np.ndarray
) -> tuple[WarpingFunction, bool]:
    """Exponentiate phase coordinates to a warp, clamping stray negatives."""
    psi = exp_map(model.psi_mean(), v)
    clamped = bool(psi.psi.min() < 0.0)
    if clamped:
        arr = np.clip(psi.psi, 0.0, None)
        nrm = l2_norm(model.grid, arr)
        if nrm < 1e-8:
            arr = np.ones_like(arr)
            nrm = l2_norm(model.grid, arr)
        psi = SqrtDensity(model.grid, arr / nrm)
    return from_psi(psi), clamped


def principal_path(
    model: JointFpcaModel, component: int, tau: float
) -> tuple[SampledFunction, WarpingFunction]:
    """Point at `tau` standard deviations along one principal component.

    Returns the amplitude path as a function (SRSF integrated from the
    sample's mean starting value) and the phase path as a warp.
    """
    if not 0 <= component < model.retained_k:
        raise SizeError(
            f"component {component} out of range for k = {model.retained_k}"
        )
    T = model.grid.size
    sd = float(np.sqrt(model.variances[component]))
    row = model.basis[component]
    q_path = model.mean_srsf + tau * sd * row[:T]
    v_path = (tau * sd / model.scale_c) * row[T:]
    f_path = from_srsf(Srsf(model.grid, q_path), f0=model.origin_value)
    warp, clamped = _tangent_to_warp(model, v_path)
    if clamped:
        warnings.warn(
            "principal path left the warp space and was clamped",
            PhaseClampWarning,
            stacklevel=2,
        )
    return f_path, warp


def draw_from_model(
    model: JointFpcaModel, n: int, rng: np.random.Generator
) -> list[JointVector]:
    """Model draws using an externally supplied generator (for substreams)."""
    coeffs = rng.standard_normal((n, model.retained_k)) * np.sqrt(model.variances)
    rows = model.mean_joint() + coeffs @ model.basis
    T = model.grid.size
    return [
        JointVector(model.grid, row[:T], row[T:] / model.scale_c, model.scale_c)
        for row in rows
    ]


def sample_model(model: JointFpcaModel, n: int, seed: int) -> list[JointVector]:
    """Draw joint vectors from the fitted Gaussian coefficient model.

    Coefficients are independent normals with the model variances;
    deterministic for a fixed seed.
    """
    if n < 1:
        raise SizeError("n must be positive")
    return draw_from_model(model, n, rng_stream(seed))


def joint_of(
    model: JointFpcaModel, q: Srsf, warp: WarpingFunction
) -> JointVector:
    """Embed an aligned SRSF and its warp as a joint vector under the model.

    The warp enters through its tangent coordinates at the model's phase
    mean, so `joint_of` is the (approximate) inverse of
    :func:`decompose_sample`.
    """
    if q.grid.size != model.grid.size:
        raise SizeError("function grid does not match the model grid")
    v = inv_exp_map(model.psi_mean(), to_psi(warp)).v
    return JointVector(model.grid, q.q, v, model.scale_c)


def decompose_sample(
    model: JointFpcaModel, joint: JointVector
) -> tuple[Srsf, WarpingFunction]:
    """Split a joint vector into its aligned SRSF and its warp.

    The warp is the exponential of the phase block at the model's phase
    mean.  Draws far out in the tangent space can exponentiate to a
    square-root density with negative values; these are clamped to the
    orthant (with a :class:`PhaseClampWarning`).
    """
    if joint.grid.size != model.grid.size:
        raise SizeError("joint vector grid does not match the model grid")
    q = Srsf(model.grid, joint.amplitude)
    warp, clamped = _tangent_to_warp(model, joint.phase)
    if clamped:
        warnings.warn(
            "sampled warp left the nonnegative orthant and was clamped",
            PhaseClampWarning,
            stacklevel=2,
        )
    return q, warp
