"""Bootstrapped tolerance bands: quantile picks, aggregation, membership."""

import numpy as np
import pytest

from elastictb.band import (
    _BAND_SPACE,
    BandCoverageReport,
    amplitude_inside,
    amplitude_quantiles,
    bootstrap_bands,
    coverage_experiment,
    observed_pair,
    phase_quantiles,
    surface_coords,
    warp_inside,
)
from elastictb.config import rng_stream
from elastictb.errors import SizeError
from elastictb.fpca import decompose_sample, draw_from_model, fit_joint_fpca
from elastictb.groupwise import align_sample
from elastictb.registration import pairwise_align
from elastictb.sphere import from_psi, phase_distance, to_psi
from elastictb.srsf import (
    SampledFunction,
    Srsf,
    WarpingFunction,
    uniform_grid,
    warp_srsf,
)


class TestAmplitudeQuantiles:
    def test_linear_family_oracle(self):
        # Linear functions with slopes 1..101 have constant SRSFs sqrt(s),
        # the identity warp is optimal between constants, and the elastic
        # distance reduces to |sqrt(s_i) - sqrt(s_med)|.  The construction
        # then has a closed form: median at the middle slope, and at
        # p = 0.5 each side contributes the member ceil(n_side / 4) in
        # from its extreme end, slopes 13 and 89.
        grid = uniform_grid(11)
        slopes = np.arange(1, 102)
        qs = [Srsf(grid, np.full(11, np.sqrt(s))) for s in slopes]
        lower, median, upper = amplitude_quantiles(qs, coverage_p=0.5)
        assert np.abs(median.q - np.sqrt(51.0)).max() < 1e-3
        assert np.allclose(lower.q, np.sqrt(13.0))
        assert np.allclose(upper.q, np.sqrt(89.0))

    def test_small_coverage_reaches_the_extremes(self):
        grid = uniform_grid(11)
        slopes = np.arange(1, 102)
        qs = [Srsf(grid, np.full(11, np.sqrt(s))) for s in slopes]
        lower, _, upper = amplitude_quantiles(qs, coverage_p=0.01)
        assert np.allclose(lower.q, np.sqrt(1.0))
        assert np.allclose(upper.q, np.sqrt(101.0))

    def test_bounds_are_sample_members(self):
        grid = uniform_grid(21)
        rng = np.random.default_rng(3)
        qs = [Srsf(grid, rng.standard_normal(21)) for _ in range(15)]
        lower, _, upper = amplitude_quantiles(qs, coverage_p=0.2)
        pool = [q.q.tobytes() for q in qs]
        assert lower.q.tobytes() in pool
        assert upper.q.tobytes() in pool

    def test_identical_sample_collapses_onto_itself(self):
        grid = uniform_grid(11)
        row = np.sin(3.0 * grid)
        qs = [Srsf(grid, row.copy()) for _ in range(4)]
        lower, median, upper = amplitude_quantiles(qs, coverage_p=0.5)
        assert np.allclose(lower.q, row, atol=1e-9)
        assert np.allclose(median.q, row, atol=1e-9)
        assert np.allclose(upper.q, row, atol=1e-9)


class TestPhaseQuantiles:
    @staticmethod
    def exp_warp(grid, a):
        return WarpingFunction(
            grid, (np.exp(a * grid) - 1.0) / (np.exp(a) - 1.0)
        )

    def test_symmetric_family_centers_on_the_identity(self):
        grid = uniform_grid(101)
        warps = [self.exp_warp(grid, a) for a in (-0.8, -0.4, 0.4, 0.8)]
        lower, median, upper = phase_quantiles(warps, coverage_p=0.5)
        assert np.abs(from_psi(median).gamma - grid).max() < 5e-3
        # The two bounds sit on opposite sides of the identity.
        g_lo, g_up = from_psi(lower).gamma, from_psi(upper).gamma
        mid = len(grid) // 2
        assert (g_lo[mid] - grid[mid]) * (g_up[mid] - grid[mid]) < 0.0

    def test_bounds_are_sample_members(self):
        grid = uniform_grid(101)
        warps = [self.exp_warp(grid, a) for a in (-0.9, -0.5, -0.1, 0.3, 0.7)]
        psis = [to_psi(w).psi.tobytes() for w in warps]
        lower, _, upper = phase_quantiles(warps, coverage_p=0.3)
        assert lower.psi.tobytes() in psis
        assert upper.psi.tobytes() in psis


class TestBandConstruction:
    def test_single_replicate_reproduces_its_own_quantiles(self, model):
        with pytest.warns(RuntimeWarning):
            band = bootstrap_bands(
                model,
                per_replicate_n=12,
                bootstrap_s=1,
                coverage_p=0.2,
                confidence_alpha=0.10,
                seed=5,
            )
        rng = rng_stream(5, _BAND_SPACE, 0)
        draws = draw_from_model(model, 12, rng)
        import warnings as _warnings

        qs, warps = [], []
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")
            for j in draws:
                q, w = decompose_sample(model, j)
                qs.append(q)
                warps.append(w)
        alo, amed, aup = amplitude_quantiles(qs, 0.2)
        # The pool median of a single replicate is that replicate's median
        # up to one rounding step of the iteration.
        assert np.allclose(band.amplitude_median_srsf.q, amed.q,
                           rtol=0.0, atol=1e-12)
        bounds = {band.amplitude_lower_srsf.q.tobytes(),
                  band.amplitude_upper_srsf.q.tobytes()}
        assert bounds == {alo.q.tobytes(), aup.q.tobytes()}

    def test_spans_match_the_reported_bounds(self, small_band):
        b = small_band
        d_lo = pairwise_align(b.amplitude_median_srsf, b.amplitude_lower_srsf)[1]
        d_up = pairwise_align(b.amplitude_median_srsf, b.amplitude_upper_srsf)[1]
        assert b.amplitude_span == (pytest.approx(d_lo), pytest.approx(d_up))
        med = to_psi(b.phase_median)
        p_lo = phase_distance(med, to_psi(b.phase_lower))
        p_up = phase_distance(med, to_psi(b.phase_upper))
        assert b.phase_span == (
            pytest.approx(p_lo, abs=1e-9),
            pytest.approx(p_up, abs=1e-9),
        )

    def test_same_seed_reproduces_the_band(self, model):
        kw = dict(per_replicate_n=8, bootstrap_s=25, coverage_p=0.2,
                  confidence_alpha=0.4, seed=11)
        a = bootstrap_bands(model, **kw)
        b = bootstrap_bands(model, **kw)
        c = bootstrap_bands(model, **{**kw, "seed": 12})
        assert np.array_equal(a.amplitude_lower.values, b.amplitude_lower.values)
        assert np.array_equal(a.phase_upper.gamma, b.phase_upper.gamma)
        assert not np.array_equal(a.amplitude_lower.values,
                                  c.amplitude_lower.values)

    def test_few_replicates_warn(self, model):
        with pytest.warns(RuntimeWarning, match="noisy"):
            bootstrap_bands(model, per_replicate_n=6, bootstrap_s=10,
                            coverage_p=0.2, confidence_alpha=0.2, seed=0)

    def test_invalid_fractions_rejected(self, model):
        with pytest.raises(SizeError):
            bootstrap_bands(model, coverage_p=0.0)
        with pytest.raises(SizeError):
            bootstrap_bands(model, confidence_alpha=1.0)

    def test_degenerate_model_yields_a_collapsed_band(self):
        grid = uniform_grid(61)
        f = SampledFunction(grid, np.sin(2.0 * np.pi * grid))
        result = align_sample([f, f, f, f], grid_size=61)
        model = fit_joint_fpca(result)
        with pytest.warns(RuntimeWarning):
            band = bootstrap_bands(model, per_replicate_n=6, bootstrap_s=8,
                                   coverage_p=0.2, confidence_alpha=0.2, seed=1)
        assert band.degenerate
        assert band.amplitude_span[0] < 1e-6
        assert band.amplitude_span[1] < 1e-6
        assert amplitude_inside(band, band.amplitude_median_srsf)


class TestMembership:
    def test_median_and_bounds_are_inside(self, small_band):
        b = small_band
        assert amplitude_inside(b, b.amplitude_median_srsf)
        assert amplitude_inside(b, b.amplitude_lower_srsf)
        assert amplitude_inside(b, b.amplitude_upper_srsf)
        assert warp_inside(b, b.phase_median)
        assert warp_inside(b, b.phase_lower)
        assert warp_inside(b, b.phase_upper)

    def test_distant_function_is_outside(self, small_band):
        b = small_band
        far = Srsf(b.grid, b.amplitude_median_srsf.q + 5.0)
        assert not amplitude_inside(b, far)

    def test_extreme_warp_is_outside(self, small_band):
        grid = small_band.grid
        warp = WarpingFunction(grid, grid**6)
        assert not warp_inside(small_band, warp)


class TestSurface:
    def test_positions_accumulate_the_spans(self, small_band):
        for mode, span in (("amplitude", small_band.amplitude_span),
                           ("phase", small_band.phase_span)):
            surf = surface_coords(small_band, mode)
            assert surf.positions == pytest.approx(
                [0.0, span[0], span[0] + span[1]]
            )

    def test_amplitude_curves_are_the_band_functions(self, small_band):
        surf = surface_coords(small_band, "amplitude")
        assert np.array_equal(surf.curves[0], small_band.amplitude_lower.values)
        assert np.array_equal(surf.curves[1], small_band.amplitude_median.values)
        assert np.array_equal(surf.curves[2], small_band.amplitude_upper.values)

    def test_phase_curves_are_deviations_from_identity(self, small_band):
        surf = surface_coords(small_band, "phase")
        expected = small_band.phase_lower.gamma - small_band.grid
        assert np.array_equal(surf.curves[0], expected)

    def test_unknown_mode_rejected(self, small_band):
        with pytest.raises(SizeError):
            surface_coords(small_band, "joint")


class TestObservedPair:
    def test_unaligned_pair_is_the_plain_decomposition(self, model):
        joint = draw_from_model(model, 1, rng_stream(9))[0]
        q1, w1 = observed_pair(model, joint, realign=False)
        q2, w2 = decompose_sample(model, joint)
        assert np.array_equal(q1.q, q2.q)
        assert np.array_equal(w1.gamma, w2.gamma)

    def test_realigned_pair_is_consistent(self, model):
        from elastictb.srsf import invert_warp

        joint = draw_from_model(model, 1, rng_stream(9))[0]
        q_star, warp_hat = observed_pair(model, joint, realign=True)
        q0, warp = decompose_sample(model, joint)
        q_obs = warp_srsf(q0, invert_warp(warp))
        assert np.array_equal(q_star.q, warp_srsf(q_obs, warp_hat).q)


class TestCoverageExperiment:
    def test_small_run_reports_rates(self, model):
        report = coverage_experiment(
            model,
            coverage=0.80,
            confidences=(0.80, 0.95),
            replicates=4,
            draws_per_replicate=10,
            per_replicate_n=10,
            bootstrap_s=20,
            seed=3,
        )
        assert isinstance(report, BandCoverageReport)
        assert report.coverage == 0.80
        assert report.confidences == (0.80, 0.95)
        assert len(report.amplitude_rate) == 2
        assert len(report.phase_rate) == 2
        for r in (*report.amplitude_rate, *report.phase_rate):
            assert 0.0 <= r <= 1.0
        # A wider confidence never lowers the success rate on shared draws.
        assert report.amplitude_rate[1] >= report.amplitude_rate[0]
        assert report.phase_rate[1] >= report.phase_rate[0]

    def test_invalid_coverage_rejected(self, model):
        with pytest.raises(SizeError):
            coverage_experiment(model, coverage=1.0, replicates=1,
                                bootstrap_s=4)
