"""Synthetic generators and the delimited table format."""

import io

import numpy as np
import pytest

from elastictb.config import rng_stream
from elastictb.datasets import (
    DatasetTable,
    read_csv,
    simulate_two_bump,
    simulate_unimodal_toy,
    write_csv,
)
from elastictb.errors import ParseError, SizeError


def interior_maxima(y: np.ndarray) -> int:
    return int(np.sum((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])))


class TestTwoBump:
    def test_every_curve_has_two_interior_maxima(self):
        for seed in (0, 4, 7):
            table = simulate_two_bump(seed=seed)
            assert all(interior_maxima(row) == 2 for row in table.functions)

    def test_single_curve_uses_the_identity_warp(self):
        table = simulate_two_bump(n=1, seed=3, grid_size=201)
        z = 1.0 + 0.25 * rng_stream(3).standard_normal((1, 2))
        u = np.linspace(-3.0, 3.0, 201)
        expected = z[0, 0] * np.exp(-0.5 * (u - 1.5) ** 2) + z[0, 1] * np.exp(
            -0.5 * (u + 1.5) ** 2
        )
        assert np.allclose(table.functions[0], expected, atol=1e-12)

    def test_zero_height_variance_pins_the_midpoint_curve(self):
        table = simulate_two_bump(n=5, seed=9, z_sd=0.0, grid_size=201)
        u = np.linspace(-3.0, 3.0, 201)
        expected = np.exp(-0.5 * (u - 1.5) ** 2) + np.exp(-0.5 * (u + 1.5) ** 2)
        # The middle of an odd sample gets warp parameter zero.
        assert np.allclose(table.functions[2], expected, atol=1e-12)

    def test_domain_is_rescaled_to_unit_interval(self):
        table = simulate_two_bump(n=2, seed=0)
        assert table.grid[0] == 0.0
        assert table.grid[-1] == 1.0

    def test_deterministic_per_seed(self):
        a = simulate_two_bump(n=4, seed=5)
        b = simulate_two_bump(n=4, seed=5)
        c = simulate_two_bump(n=4, seed=6)
        assert np.array_equal(a.functions, b.functions)
        assert not np.array_equal(a.functions, c.functions)

    def test_rejects_empty_sample(self):
        with pytest.raises(SizeError):
            simulate_two_bump(n=0)


class TestUnimodalToy:
    def test_default_sample_size(self):
        assert simulate_unimodal_toy().sample_size == 29

    def test_curves_are_unimodal(self):
        table = simulate_unimodal_toy(seed=0)
        assert all(interior_maxima(row) <= 1 for row in table.functions)

    def test_peak_heights_concentrate_near_one(self):
        table = simulate_unimodal_toy(n=200, seed=1, a_sd=0.1)
        peaks = table.functions.max(axis=1)
        assert abs(peaks.mean() - 1.0) < 0.02


class TestTableValidation:
    def test_rejects_short_grid(self):
        with pytest.raises(SizeError):
            DatasetTable(np.array([0.0, 1.0]), np.zeros((1, 2)), ["f1"])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(SizeError):
            DatasetTable(np.linspace(0, 1, 5), np.zeros((2, 4)), ["f1", "f2"])

    def test_rejects_label_count_mismatch(self):
        with pytest.raises(SizeError):
            DatasetTable(np.linspace(0, 1, 5), np.zeros((2, 5)), ["f1"])

    def test_rejects_duplicate_labels(self):
        with pytest.raises(ParseError):
            DatasetTable(np.linspace(0, 1, 5), np.zeros((2, 5)), ["f1", "f1"])


class TestCsv:
    def test_round_trip_is_exact(self):
        table = simulate_two_bump(n=3, seed=2, grid_size=11)
        buf = io.StringIO()
        write_csv(table, buf)
        back = read_csv(io.StringIO(buf.getvalue()))
        assert back.labels == table.labels
        assert np.array_equal(back.grid, table.grid)
        assert np.array_equal(back.functions, table.functions)

    def test_headerless_input_gets_default_labels(self):
        text = "0,1,2\n0.5,3,4\n1,5,6\n"
        table = read_csv(io.StringIO(text))
        assert table.labels == ["f1", "f2"]
        assert table.sample_size == 2

    def test_minimal_three_row_table(self):
        table = read_csv(io.StringIO("t,f1\n0,1\n0.5,2\n1,3\n"))
        assert np.array_equal(table.functions, [[1.0, 2.0, 3.0]])

    def test_ragged_row_reports_its_line(self):
        text = "t,f1\n0,1\n0.5,2,9\n1,3\n"
        with pytest.raises(ParseError) as err:
            read_csv(io.StringIO(text))
        assert "line 3" in str(err.value)

    def test_non_numeric_field_reports_its_line(self):
        text = "t,f1\n0,1\n0.5,oops\n1,3\n"
        with pytest.raises(ParseError) as err:
            read_csv(io.StringIO(text))
        assert "line 3" in str(err.value)

    def test_non_increasing_grid_rejected(self):
        text = "t,f1\n0,1\n0.5,2\n0.5,3\n"
        with pytest.raises(ParseError) as err:
            read_csv(io.StringIO(text))
        assert "increase" in str(err.value)

    def test_empty_row_rejected(self):
        with pytest.raises(ParseError):
            read_csv(io.StringIO("t,f1\n0,1\n\n1,3\n"))

    def test_too_few_rows_rejected(self):
        with pytest.raises(ParseError):
            read_csv(io.StringIO("t,f1\n0,1\n1,3\n"))

    def test_duplicate_header_labels_rejected(self):
        with pytest.raises(ParseError):
            read_csv(io.StringIO("t,f1,f1\n0,1,2\n0.5,3,4\n1,5,6\n"))
