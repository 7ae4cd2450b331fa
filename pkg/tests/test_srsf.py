"""Square-root slope transforms, warp algebra, and their numerical bounds.

The roundtrip and isometry tolerances asserted here are the package's
documented accuracy for smooth functions on a 101-point grid; the
acceptance suite re-checks them as part of the geometry gate.
"""

import numpy as np
import pytest

from elastictb.errors import DomainError, SizeError
from elastictb.srsf import (
    SampledFunction,
    Srsf,
    WarpingFunction,
    apply_warp,
    compose_warps,
    from_srsf,
    identity_warp,
    invert_warp,
    l2_inner,
    l2_norm,
    normalize_domain,
    repair_warp,
    resample,
    to_srsf,
    uniform_grid,
    warp_srsf,
)

# Documented accuracy of the transform pair on smooth data: second-order
# finite differences against trapezoid integration, so errors shrink as
# the square of the grid step.  Measured on the suite's test family:
# isometry error 1.4e-3 at T = 101 and 6.4e-5 at T = 501.
ROUNDTRIP_TOL = 5e-3
ISOMETRY_TOL_T101 = 2e-3
ISOMETRY_TOL_T501 = 1e-4

T = 101
GRID = uniform_grid(T)


def smooth_test_function() -> SampledFunction:
    values = np.sin(2.0 * np.pi * GRID) + 0.3 * np.cos(5.0 * GRID)
    return SampledFunction(GRID, values)


def exp_warp(a: float, grid: np.ndarray = GRID) -> WarpingFunction:
    if a == 0.0:
        return identity_warp(grid)
    return WarpingFunction(grid, (np.exp(a * grid) - 1.0) / (np.exp(a) - 1.0))


class TestValueTypes:
    def test_grid_must_increase(self):
        with pytest.raises(DomainError):
            SampledFunction(np.array([0.0, 0.5, 0.4, 1.0]), np.zeros(4))

    def test_grid_too_short(self):
        with pytest.raises(SizeError):
            SampledFunction(np.array([0.0, 1.0]), np.zeros(2))

    def test_values_shape_mismatch(self):
        with pytest.raises(SizeError):
            SampledFunction(GRID, np.zeros(T - 1))

    def test_non_finite_rejected(self):
        bad = np.zeros(T)
        bad[3] = np.nan
        with pytest.raises(DomainError):
            Srsf(GRID, bad)

    def test_warp_endpoints_enforced(self):
        with pytest.raises(DomainError):
            WarpingFunction(GRID, GRID * 0.9)

    def test_warp_must_be_nondecreasing(self):
        gamma = GRID.copy()
        gamma[40] = gamma[60]
        gamma[60] = GRID[40]
        with pytest.raises(DomainError):
            WarpingFunction(GRID, gamma)

    def test_warp_grid_must_span_unit_interval(self):
        g = np.linspace(0.0, 2.0, T)
        with pytest.raises(DomainError):
            WarpingFunction(g, g / 2.0)


class TestTransforms:
    def test_roundtrip_recovers_smooth_function(self):
        f = smooth_test_function()
        back = from_srsf(to_srsf(f), f0=float(f.values[0]))
        assert np.max(np.abs(back.values - f.values)) <= ROUNDTRIP_TOL

    def test_roundtrip_handles_decreasing_segments(self):
        f = SampledFunction(GRID, np.cos(3.0 * np.pi * GRID))
        back = from_srsf(to_srsf(f), f0=float(f.values[0]))
        assert np.max(np.abs(back.values - f.values)) <= ROUNDTRIP_TOL

    def test_constant_function_has_negligible_srsf(self):
        # Slopes of a constant cancel only up to float rounding on the
        # nonuniform-step gradient formula, so allow square-rooted dust.
        q = to_srsf(SampledFunction(GRID, np.full(T, 2.5)))
        assert np.max(np.abs(q.q)) < 1e-6

    def test_linear_function_srsf_is_sqrt_slope(self):
        q = to_srsf(SampledFunction(GRID, 4.0 * GRID))
        assert np.allclose(q.q, 2.0, atol=1e-12)

    def test_smoothing_reduces_noise_energy(self, rng):
        noisy = np.sin(2.0 * np.pi * GRID) + 0.05 * rng.standard_normal(T)
        f = SampledFunction(GRID, noisy)
        raw = to_srsf(f, smooth=0)
        smoothed = to_srsf(f, smooth=2)
        assert smoothed.norm() < raw.norm()

    def test_from_srsf_starts_at_f0(self):
        q = to_srsf(smooth_test_function())
        assert from_srsf(q, f0=3.25).values[0] == 3.25


class TestWarpAction:
    def test_action_is_isometric_at_working_resolution(self):
        q = to_srsf(smooth_test_function())
        for a in (-1.0, -0.3, 0.5, 1.0):
            warped = warp_srsf(q, exp_warp(a))
            assert abs(warped.norm() - q.norm()) <= ISOMETRY_TOL_T101

    def test_action_isometry_tightens_with_resolution(self):
        grid = uniform_grid(501)
        f = SampledFunction(grid, np.sin(2.0 * np.pi * grid) + 0.3 * np.cos(5.0 * grid))
        q = to_srsf(f)
        for a in (-1.0, -0.5, 0.5, 1.0):
            warped = warp_srsf(q, exp_warp(a, grid))
            assert abs(warped.norm() - q.norm()) <= ISOMETRY_TOL_T501

    def test_identity_warp_acts_trivially(self):
        q = to_srsf(smooth_test_function())
        warped = warp_srsf(q, identity_warp(GRID))
        assert np.allclose(warped.q, q.q, atol=1e-12)

    def test_action_matches_function_composition(self):
        # Differentiate-then-warp and warp-then-differentiate agree in the
        # quadrature metric; pointwise they differ near slope extrema.
        f = smooth_test_function()
        warp = exp_warp(0.8)
        via_function = to_srsf(apply_warp(f, warp))
        via_action = warp_srsf(to_srsf(f), warp)
        err = l2_norm(GRID, via_function.q - via_action.q)
        assert err < 0.05 * via_action.norm()

    def test_apply_warp_needs_unit_domain(self):
        f = SampledFunction(np.linspace(0.0, 2.0, T), np.zeros(T))
        with pytest.raises(DomainError):
            apply_warp(f, identity_warp(GRID))


class TestWarpAlgebra:
    def test_compose_with_inverse_is_identity(self):
        warp = exp_warp(1.2)
        round_trip = compose_warps(warp, invert_warp(warp))
        assert np.max(np.abs(round_trip.gamma - GRID)) < 1e-3

    def test_inverse_of_identity(self):
        inv = invert_warp(identity_warp(GRID))
        assert np.allclose(inv.gamma, GRID, atol=1e-12)

    def test_composition_associates_with_interp_error(self):
        a, b = exp_warp(0.7), exp_warp(-0.4)
        left = compose_warps(a, b)
        direct = np.interp(b.gamma, GRID, a.gamma)
        assert np.allclose(left.gamma, direct, atol=1e-12)

    def test_repair_warp_fixes_flat_spots(self):
        gamma = GRID.copy()
        gamma[30:50] = gamma[30]
        repaired = repair_warp(GRID, gamma)
        assert np.all(np.diff(repaired.gamma) > 0.0)
        assert repaired.gamma[0] == 0.0 and repaired.gamma[-1] == 1.0

    def test_repair_warp_keeps_monotone_input(self):
        warp = exp_warp(0.5)
        repaired = repair_warp(GRID, warp.gamma)
        assert np.max(np.abs(repaired.gamma - warp.gamma)) < 1e-7


class TestGridHelpers:
    def test_normalize_domain_maps_to_unit_interval(self):
        g = np.linspace(-3.0, 3.0, T)
        f = normalize_domain(g, np.sin(g))
        assert f.grid[0] == 0.0 and f.grid[-1] == 1.0
        assert np.allclose(f.values, np.sin(g))

    def test_resample_within_domain(self):
        f = smooth_test_function()
        coarse = resample(f, uniform_grid(41))
        assert coarse.grid.size == 41
        assert np.allclose(coarse.values[0], f.values[0])

    def test_resample_rejects_extrapolation(self):
        f = SampledFunction(np.linspace(0.1, 0.9, T), np.zeros(T))
        with pytest.raises(DomainError):
            resample(f, GRID)

    def test_l2_norm_of_constant(self):
        assert l2_norm(GRID, np.full(T, 2.0)) == pytest.approx(2.0, abs=1e-12)

    def test_l2_inner_orthogonal_harmonics(self):
        a = np.sin(2.0 * np.pi * GRID)
        b = np.cos(2.0 * np.pi * GRID)
        assert abs(l2_inner(GRID, a, b)) < 1e-12

    def test_uniform_grid_size_check(self):
        with pytest.raises(SizeError):
            uniform_grid(2)
