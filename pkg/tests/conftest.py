"""Shared fixtures: one aligned two-bump sample and its fitted model.

The heavier fixtures are session-scoped; tests that mutate nothing share
them, which keeps the whole suite fast enough to run on every change.
"""

import numpy as np
import pytest

from elastictb.band import bootstrap_bands
from elastictb.datasets import simulate_two_bump
from elastictb.fpca import fit_joint_fpca
from elastictb.groupwise import align_sample
from elastictb.srsf import SampledFunction

DATA_SEED = 4
GRID_SIZE = 101


@pytest.fixture(scope="session")
def two_bump_table():
    return simulate_two_bump(n=21, seed=DATA_SEED, grid_size=301)


@pytest.fixture(scope="session")
def alignment(two_bump_table):
    return align_sample(two_bump_table.as_functions(), grid_size=GRID_SIZE)


@pytest.fixture(scope="session")
def model(alignment):
    return fit_joint_fpca(alignment, variance_threshold=0.90)


@pytest.fixture(scope="session")
def small_band(model):
    """A cheap band for shape, serialization, and figure tests."""
    return bootstrap_bands(
        model,
        per_replicate_n=10,
        bootstrap_s=40,
        coverage_p=0.10,
        confidence_alpha=0.20,
        seed=7,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def make_function(grid, values):
    return SampledFunction(np.asarray(grid, dtype=float),
                           np.asarray(values, dtype=float))
