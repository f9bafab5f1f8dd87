"""Mean-subtracted patch batches."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

CENTER_TOLERANCE = 1e-9


class DataError(Exception):
    """Input data error."""

    pass


def center_patches(raw: np.ndarray) -> np.ndarray:
    """Subtract each row's mean."""
    raw = np.asarray(raw, dtype=np.float64)
    return raw - raw.mean(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class PatchBatch:
    """``N`` flattened ``side x side`` patches, each with zero mean.

    Attributes:
        side: Patch side length
        patches: ``N x M`` matrix, ``M = side**2``
        sources: One provenance tag per patch
    """

    side: int
    patches: np.ndarray
    sources: tuple[str, ...]

    def __post_init__(self):
        if self.patches.ndim != 2 or self.patches.shape[1] != self.side * self.side:
            raise DataError(
                f"Patches must be N x {self.side * self.side}, got shape {self.patches.shape}"
            )
        if len(self.sources) != self.patches.shape[0]:
            raise DataError(
                f"{len(self.sources)} source tags for {self.patches.shape[0]} patches"
            )
        if self.patches.size and np.max(np.abs(self.patches.mean(axis=1))) > CENTER_TOLERANCE:
            raise DataError("Patches must be mean-subtracted")

    @classmethod
    def from_raw(cls, side: int, raw: np.ndarray, sources: Sequence[str]) -> "PatchBatch":
        """Build a batch from uncentred intensities."""
        return cls(side=side, patches=center_patches(raw), sources=tuple(sources))

    @property
    def size(self) -> int:
        return self.patches.shape[0]

    @property
    def pixels(self) -> int:
        return self.patches.shape[1]

    def subset(self, indices) -> "PatchBatch":
        indices = np.asarray(indices, dtype=np.int64)
        return PatchBatch(
            side=self.side,
            patches=self.patches[indices],
            sources=tuple(self.sources[i] for i in indices),
        )

    def sample(self, count: int, rng: np.random.Generator) -> "PatchBatch":
        """Draw ``count`` patches without replacement (all, shuffled, if fewer)."""
        count = min(count, self.size)
        return self.subset(rng.choice(self.size, size=count, replace=False))

    def split(self, holdout_fraction: float, rng: np.random.Generator) -> tuple["PatchBatch", "PatchBatch"]:
        """Split into disjoint (train, held-out) batches."""
        if self.size < 2:
            raise DataError("Need at least two patches to split")
        order = rng.permutation(self.size)
        n_holdout = min(max(1, int(round(self.size * holdout_fraction))), self.size - 1)
        return self.subset(np.sort(order[n_holdout:])), self.subset(np.sort(order[:n_holdout]))


def save_batch(batch: PatchBatch, path: Path) -> Path:
    """Write a batch to a compressed ``.npz`` file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        np.savez_compressed(
            f,
            side=np.int64(batch.side),
            patches=batch.patches,
            sources=np.array(batch.sources, dtype=str),
        )
    logger.info(f"Saved {batch.size} patches to {path}")
    return path


def load_batch(path: Path) -> PatchBatch:
    """Read a batch written by :func:`save_batch`.

    Raises:
        DataError: If the file is missing or malformed
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"Batch file not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            side = int(data["side"])
            patches = np.asarray(data["patches"], dtype=np.float64)
            sources = tuple(str(s) for s in data["sources"])
    except (KeyError, ValueError, OSError) as e:
        raise DataError(f"Invalid batch file {path}: {e}")
    return PatchBatch(side=side, patches=patches, sources=sources)
