"""Run configuration, seeded random streams, and replicate parallelism.

Every stochastic routine in the package draws from a counter-based Philox
generator keyed by an integer seed plus an explicit substream key (such as
a replicate index).  Substreams are independent and reproducible, so a run
parallelized over replicates produces byte-identical results to a
sequential one.  The environment variable ``ELASTIC_TB_THREADS`` caps the
number of worker processes used for replicate-level parallelism; it
defaults to 1 (sequential).
"""

from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

__all__ = ["ExperimentConfig", "rng_stream", "worker_count", "parallel_map"]

THREADS_ENV = "ELASTIC_TB_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for the given seed and substream key."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def worker_count() -> int:
    """Worker cap from ``ELASTIC_TB_THREADS`` (minimum 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Map `fn` over `items`, in worker processes when configured.

    Results always come back in input order, so parallel and sequential
    execution are interchangeable as long as `fn` derives its randomness
    from the item (for example a replicate index mapped to a substream).
    """
    workers = worker_count()
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved parameters for a tolerance-bound run.

    ``coverage_p`` follows the band convention (tail mass outside the
    bounds, so 0.01 means 99% coverage); ``confidence_alpha`` and
    ``confidence_beta`` are the band and factor confidence parameters.
    """

    seed: int = 0
    n_functions: int = 21
    grid_size: int = 101
    bootstrap_s: int = 500
    per_replicate_n: int = 30
    coverage_p: float = 0.01
    confidence_alpha: float = 0.05
    confidence_beta: float = 0.95
    variance_threshold: float = 0.90
    n_components: int | None = None
    scale_c: float | None = None

    def __post_init__(self):
        if self.n_functions < 1:
            raise ValueError("n_functions must be positive")
        if self.grid_size < 3:
            raise ValueError("grid_size must be at least 3")
        if self.bootstrap_s < 1 or self.per_replicate_n < 1:
            raise ValueError("bootstrap_s and per_replicate_n must be positive")
        for name in ("coverage_p", "confidence_alpha", "confidence_beta",
                     "variance_threshold"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie strictly between 0 and 1")
        if self.n_components is not None and self.n_components < 1:
            raise ValueError("n_components must be positive when given")
        if self.scale_c is not None and self.scale_c <= 0.0:
            raise ValueError("scale_c must be positive when given")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)
