"""Shared fixtures: desk-scale synthetic runs sized for fast tests.

The tiny geometry keeps the real pipeline shape (downsample -> window ->
classify) at ~1000x less data: factor 10, window 160 (two pooled time
steps), 1 kHz sampling, captures a few windows long.
"""

import numpy as np
import pytest

from capturenet.datasets import AnnotatedTrace
from capturenet.sim import SimParams, generate_run
from capturenet.types import DetectorConfig

TINY_WINDOW = 160
TINY_FACTOR = 10


def tiny_sim_params() -> SimParams:
    return SimParams(
        sample_rate_hz=1000.0,
        capture_duration_s=(4.0, 10.0),
        transloc_duration_s=(2.0, 5.0),
        min_filler_s=2.0,
        drop_duration_s=(0.005, 0.02),
    )


def tiny_config(**overrides) -> DetectorConfig:
    base = dict(downsample_factor=TINY_FACTOR, window_size=TINY_WINDOW)
    base.update(overrides)
    return DetectorConfig(**base)


def make_tiny_run(seed: int, n_captures: int = 2, total: int = 40_000,
                  channel: int = 1) -> AnnotatedTrace:
    trace, anns = generate_run(
        n_captures,
        total,
        seed=seed,
        params=tiny_sim_params(),
        run_id=f"tiny-{seed:03d}",
        channel=channel,
    )
    return AnnotatedTrace(trace=trace, annotations=tuple(anns))


def make_tiny_runs(n: int, seed: int = 0, n_captures=(1, 2)) -> list[AnnotatedTrace]:
    rng = np.random.default_rng(seed)
    return [
        make_tiny_run(
            seed * 1000 + i,
            n_captures=int(rng.integers(n_captures[0], n_captures[1] + 1)),
            channel=(i % 512) + 1,
        )
        for i in range(n)
    ]


@pytest.fixture(scope="session")
def tiny_runs():
    return make_tiny_runs(6, seed=1)


@pytest.fixture(scope="session")
def tiny_detector_config():
    return tiny_config()
