"""Shared fixtures."""

from pathlib import Path

import numpy as np
import pytest

from tsc_forest.config import TrainConfig
from tsc_forest.dataio import PatchBatch, gen_synthetic_lines, synthesize_corpus
from tsc_forest.liegroup import build_generators


@pytest.fixture(scope="session")
def gens4():
    return build_generators(4)


@pytest.fixture(scope="session")
def gens8():
    return build_generators(8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def band_limited():
    """Factory for smooth periodic patches with no Nyquist content."""

    def make(side: int, seed: int = 0, max_freq: int = 2) -> np.ndarray:
        local = np.random.default_rng(seed)
        rows, cols = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
        image = np.zeros((side, side))
        for ky in range(-max_freq, max_freq + 1):
            for kx in range(-max_freq, max_freq + 1):
                phase = 2 * np.pi * (ky * rows + kx * cols) / side
                image += local.normal() * np.cos(phase) + local.normal() * np.sin(phase)
        return image.reshape(-1)

    return make


@pytest.fixture(scope="session")
def image_dir():
    """Committed PGMs: a 16x12 ramp (16 * column) and a 12x12 checkerboard of 40/200 blocks."""
    return Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """Three 32x32 1/f images."""
    directory = tmp_path_factory.mktemp("corpus")
    synthesize_corpus(directory, np.random.default_rng(5), count=3, size=32)
    return directory


@pytest.fixture
def line_pool():
    """400 mean-subtracted 4x4 line patches."""
    return gen_synthetic_lines(400, np.random.default_rng(7), side=4)


@pytest.fixture
def random_batch():
    """Factory for random centred batches."""

    def make(side: int, count: int, seed: int = 0) -> PatchBatch:
        raw = np.random.default_rng(seed).normal(size=(count, side * side))
        return PatchBatch.from_raw(side, raw, [f"r{i}" for i in range(count)])

    return make


@pytest.fixture
def small_config():
    """Fast training settings on 4x4 patches."""
    return TrainConfig(
        trees=2,
        branching=2,
        side=4,
        lambda_w=0.1,
        epochs=3,
        batch_size=100,
        reinit_every=2,
        seed=3,
    )
