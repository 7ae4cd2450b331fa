"""Geometry of warps on the square-root-density sphere.

The analytic anchor used here: for gamma(t) = t^2 the square-root density
is psi(t) = sqrt(2t), and its inner product with the identity's constant
psi = 1 is the integral of sqrt(2t) over [0, 1], which is 2*sqrt(2)/3.
The phase distance to the identity is therefore arccos(2*sqrt(2)/3).
"""

import numpy as np
import pytest

from elastictb.errors import SizeError
from elastictb.sphere import (
    SqrtDensity,
    exp_map,
    from_psi,
    identity_psi,
    inv_exp_map,
    karcher_mean_psi,
    karcher_mean_warps,
    karcher_median_psi,
    phase_distance,
    to_psi,
)
from elastictb.srsf import WarpingFunction, identity_warp, l2_norm, uniform_grid

T = 101
GRID = uniform_grid(T)

QUADRATIC_WARP_DISTANCE = float(np.arccos(2.0 * np.sqrt(2.0) / 3.0))

UNIT_NORM_TOL = 1e-6
EXP_LOG_TOL = 1e-5
KARCHER_GRAD_TOL = 1e-6
TRIANGLE_TOL = 1e-8


def exp_warp(a: float, grid: np.ndarray = GRID) -> WarpingFunction:
    if a == 0.0:
        return identity_warp(grid)
    return WarpingFunction(grid, (np.exp(a * grid) - 1.0) / (np.exp(a) - 1.0))


def random_warp(rng, grid: np.ndarray = GRID) -> WarpingFunction:
    steps = rng.gamma(shape=4.0, scale=1.0, size=grid.size - 1)
    gamma = np.concatenate([[0.0], np.cumsum(steps)])
    return WarpingFunction(grid, gamma / gamma[-1])


class TestRepresentation:
    def test_psi_has_unit_norm(self, rng):
        for _ in range(20):
            psi = to_psi(random_warp(rng))
            assert abs(l2_norm(GRID, psi.psi) - 1.0) <= UNIT_NORM_TOL

    def test_identity_maps_to_constant_one(self):
        psi = to_psi(identity_warp(GRID))
        assert np.allclose(psi.psi, 1.0, atol=1e-9)

    def test_smooth_warp_roundtrip(self):
        for a in (-1.0, -0.3, 0.4, 0.8):
            warp = exp_warp(a)
            back = from_psi(to_psi(warp))
            assert np.max(np.abs(back.gamma - warp.gamma)) < 1e-4

    def test_rough_warp_roundtrip(self, rng):
        # Jagged slopes cost about a grid step of accuracy through the
        # differentiate-integrate cycle; measured worst case was 6.8e-3.
        for _ in range(10):
            warp = random_warp(rng)
            back = from_psi(to_psi(warp))
            assert np.max(np.abs(back.gamma - warp.gamma)) < 2e-2

    def test_quadratic_warp_distance_matches_analytic_value(self):
        grid = uniform_grid(1001)
        warp = WarpingFunction(grid, grid**2)
        d = phase_distance(identity_psi(grid), to_psi(warp))
        assert d == pytest.approx(QUADRATIC_WARP_DISTANCE, abs=1e-4)

    def test_distance_is_symmetric_and_zero_on_diagonal(self, rng):
        a, b = to_psi(random_warp(rng)), to_psi(random_warp(rng))
        assert phase_distance(a, b) == pytest.approx(phase_distance(b, a), abs=1e-12)
        assert phase_distance(a, a) <= 1e-7


class TestExpLog:
    def test_roundtrip_through_tangent_space(self):
        base = identity_psi(GRID)
        for a in (-1.0, -0.4, 0.3, 0.8):
            target = to_psi(exp_warp(a))
            v = inv_exp_map(base, target)
            back = exp_map(base, v.v)
            assert l2_norm(GRID, back.psi - target.psi) <= EXP_LOG_TOL

    def test_roundtrip_from_curved_base(self, rng):
        base = to_psi(exp_warp(0.5))
        for _ in range(10):
            target = to_psi(random_warp(rng))
            v = inv_exp_map(base, target)
            back = exp_map(base, v.v)
            assert l2_norm(GRID, back.psi - target.psi) <= EXP_LOG_TOL

    def test_log_of_base_is_zero(self):
        base = to_psi(exp_warp(0.7))
        v = inv_exp_map(base, base)
        assert l2_norm(GRID, v.v) <= 1e-9

    def test_tangent_norm_equals_distance(self, rng):
        base = identity_psi(GRID)
        target = to_psi(random_warp(rng))
        v = inv_exp_map(base, target)
        assert l2_norm(GRID, v.v) == pytest.approx(
            phase_distance(base, target), abs=1e-10
        )

    def test_tangent_is_orthogonal_to_base(self, rng):
        base = to_psi(exp_warp(-0.6))
        target = to_psi(random_warp(rng))
        v = inv_exp_map(base, target)
        assert abs(np.trapezoid(v.v * base.psi, GRID)) <= 1e-9


class TestTriangleInequality:
    def test_triangle_inequality_on_random_triples(self, rng):
        psis = [to_psi(random_warp(rng)) for _ in range(60)]
        checked = 0
        while checked < 1000:
            i, j, k = rng.integers(0, len(psis), size=3)
            dij = phase_distance(psis[i], psis[j])
            djk = phase_distance(psis[j], psis[k])
            dik = phase_distance(psis[i], psis[k])
            assert dik <= dij + djk + TRIANGLE_TOL
            checked += 1


class TestKarcherStatistics:
    def test_mean_gradient_vanishes_at_convergence(self, rng):
        psis = [to_psi(random_warp(rng)) for _ in range(15)]
        mean = karcher_mean_psi(psis)
        residual = np.mean([inv_exp_map(mean, p).v for p in psis], axis=0)
        assert l2_norm(GRID, residual) <= KARCHER_GRAD_TOL

    def test_mean_of_single_point_is_that_point(self):
        psi = to_psi(exp_warp(0.9))
        mean = karcher_mean_psi([psi])
        assert l2_norm(GRID, mean.psi - psi.psi) <= 1e-12

    def test_mean_of_symmetric_family_is_near_identity(self):
        warps = [exp_warp(a) for a in np.linspace(-1.0, 1.0, 9)]
        mean = karcher_mean_psi([to_psi(w) for w in warps])
        assert np.max(np.abs(from_psi(mean).gamma - GRID)) < 1e-2

    def test_median_of_symmetric_family_is_near_identity(self):
        warps = [exp_warp(a) for a in np.linspace(-1.0, 1.0, 9)]
        median = karcher_median_psi([to_psi(w) for w in warps])
        assert np.max(np.abs(from_psi(median).gamma - GRID)) < 1e-2

    def test_median_resists_an_outlier(self):
        # One far member drags the mean further than the median.
        warps = [exp_warp(a) for a in (-0.2, -0.1, 0.0, 0.1, 0.2, 3.0)]
        psis = [to_psi(w) for w in warps]
        ident = identity_psi(GRID)
        mean_d = phase_distance(ident, karcher_mean_psi(psis))
        median_d = phase_distance(ident, karcher_median_psi(psis))
        assert median_d < mean_d

    def test_warp_mean_bundle_is_consistent(self, rng):
        warps = [random_warp(rng) for _ in range(8)]
        result = karcher_mean_warps(warps)
        assert len(result.shooting_vectors) == len(warps)
        for warp, v in zip(warps, result.shooting_vectors):
            d = phase_distance(result.psi_mean, to_psi(warp))
            assert l2_norm(GRID, v.v) == pytest.approx(d, abs=1e-9)

    def test_empty_sample_rejected(self):
        with pytest.raises(SizeError):
            karcher_mean_psi([])


class TestValidation:
    def test_mismatched_grids_rejected(self):
        a = identity_psi(GRID)
        b = identity_psi(uniform_grid(51))
        with pytest.raises(SizeError):
            phase_distance(a, b)

    def test_sqrt_density_requires_nonnegative_values(self):
        values = np.ones(T)
        values[5] = -0.2
        with pytest.raises(Exception):
            SqrtDensity(GRID, values)
