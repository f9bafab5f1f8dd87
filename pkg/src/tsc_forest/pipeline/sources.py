"""Patch pools from images or saved batches."""

import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from tsc_forest.dataio import DataError, PatchBatch, load_batch, load_images, sample_patches

logger = logging.getLogger(__name__)


def load_patch_pool(
    paths: Sequence[Path], side: int, count: int, rng: np.random.Generator
) -> PatchBatch:
    """Build a patch pool from PGM files/directories or a single ``.npz`` batch.

    Saved batches are used as they are (their side must match); images are
    sampled for ``count`` patches.

    Raises:
        DataError: If no path is given, a path is missing or sides disagree
    """
    paths = [Path(p) for p in paths]
    if not paths:
        raise DataError("No data path given")

    if len(paths) == 1 and paths[0].suffix.lower() == ".npz":
        batch = load_batch(paths[0])
        if batch.side != side:
            raise DataError(f"{paths[0]} holds {batch.side}x{batch.side} patches, expected side {side}")
        logger.info(f"Loaded {batch.size} patches from {paths[0]}")
        return batch

    named = load_images(paths)
    names = [name for name, _ in named]
    return sample_patches([image for _, image in named], side, count, rng, names=names)
