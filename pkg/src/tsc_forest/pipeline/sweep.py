"""Error surfaces over two transformation parameters."""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from tsc_forest.dataio import save_grayscale
from tsc_forest.liegroup import NUM_GENERATORS, GeneratorSet, LieGroupError, transform_matrix
from tsc_forest.presets import GENERATOR_NAMES, SWEEP_RANGES

logger = logging.getLogger(__name__)

ZERO_NORM = 1e-12


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Mean best-fit error on a grid over generators ``axes`` (1-based).

    ``errors[i, j]`` is the raw error at ``(first[i], second[j])``.
    """

    axes: tuple[int, int]
    first: np.ndarray
    second: np.ndarray
    errors: np.ndarray

    @property
    def normalized(self) -> np.ndarray:
        """Errors rescaled to [0, 1]; a flat surface maps to all zeros."""
        low, high = float(self.errors.min()), float(self.errors.max())
        if high <= low:
            return np.zeros_like(self.errors)
        return (self.errors - low) / (high - low)

    @property
    def argmin(self) -> tuple[int, int]:
        i, j = np.unravel_index(int(np.argmin(self.errors)), self.errors.shape)
        return int(i), int(j)


def best_fit_errors(transformed: np.ndarray, patches: np.ndarray) -> np.ndarray:
    """``min_w ||I - w TF||^2`` for every patch; ``||I||^2`` if ``TF`` vanishes."""
    energy = (patches**2).sum(axis=1)
    norm_sq = float(transformed @ transformed)
    if norm_sq < ZERO_NORM**2:
        return energy
    return energy - (patches @ transformed) ** 2 / norm_sq


def parse_range_spec(text: str) -> tuple[int, tuple[float, float]]:
    """Parse ``AXIS:LOW:HIGH`` (e.g. ``3:-0.5:0.5``) into a sweep range override."""
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError("expected three fields")
        axis, low, high = int(parts[0]), float(parts[1]), float(parts[2])
    except ValueError as e:
        raise ValueError(f"Invalid sweep range '{text}', expected e.g. 3:-0.5:0.5 ({e})")
    if not 1 <= axis <= NUM_GENERATORS:
        raise ValueError(f"Invalid sweep range '{text}': axis must be in 1..{NUM_GENERATORS}")
    if not low < high:
        raise ValueError(f"Invalid sweep range '{text}': low must be below high")
    return axis, (low, high)


def sweep_surface(
    gens: GeneratorSet,
    feature: np.ndarray,
    patches: np.ndarray,
    axes: tuple[int, int] = (1, 2),
    points: int = 17,
    ranges: Optional[dict[int, tuple[float, float]]] = None,
) -> SweepResult:
    """Average best-fit error of ``T(x) feature`` over a grid of two parameters.

    The other four parameters stay at zero.

    Args:
        gens: Generators
        feature: Flattened feature ``F``
        patches: ``N x M`` patches (a single patch is a 1 x M batch)
        axes: Two distinct generator indices, 1-based
        points: Grid points per axis (at least 2)
        ranges: Per-generator (low, high); defaults to SWEEP_RANGES

    Raises:
        LieGroupError: On bad axes or grid size, or an overflowing transform
    """
    first_axis, second_axis = axes
    if first_axis == second_axis or not all(1 <= a <= NUM_GENERATORS for a in axes):
        raise LieGroupError(f"Sweep axes must be two distinct generators in 1..6, got {axes}")
    if points < 2:
        raise LieGroupError("A sweep needs at least 2 points per axis")
    ranges = {**SWEEP_RANGES, **(ranges or {})}
    feature = np.asarray(feature, dtype=np.float64).reshape(-1)
    patches = np.atleast_2d(np.asarray(patches, dtype=np.float64))
    if feature.size != gens.pixels or patches.shape[1] != gens.pixels:
        raise LieGroupError(f"Feature and patches must have {gens.pixels} pixels")

    first = np.linspace(*ranges[first_axis], points)
    second = np.linspace(*ranges[second_axis], points)
    errors = np.empty((points, points))
    x = np.zeros(NUM_GENERATORS)
    for i, a in enumerate(first):
        for j, b in enumerate(second):
            x[first_axis - 1] = a
            x[second_axis - 1] = b
            transformed = transform_matrix(gens, x) @ feature
            errors[i, j] = best_fit_errors(transformed, patches).mean()

    result = SweepResult(axes=(first_axis, second_axis), first=first, second=second, errors=errors)
    i, j = result.argmin
    logger.info(
        f"Sweep over {GENERATOR_NAMES[first_axis - 1]} x {GENERATOR_NAMES[second_axis - 1]}: "
        f"minimum at ({first[i]:.3f}, {second[j]:.3f})"
    )
    return result


def write_sweep_csv(result: SweepResult, path: Path) -> Path:
    """One row per grid point with raw and normalised error and the minimum flag."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    first_name = f"x{result.axes[0]}"
    second_name = f"x{result.axes[1]}"
    normalized = result.normalized
    best = result.argmin

    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(
            f, fieldnames=[first_name, second_name, "error", "normalized", "is_min"]
        )
        writer.writeheader()
        for i, a in enumerate(result.first):
            for j, b in enumerate(result.second):
                writer.writerow(
                    {
                        first_name: format(a, ".17g"),
                        second_name: format(b, ".17g"),
                        "error": format(result.errors[i, j], ".17g"),
                        "normalized": format(normalized[i, j], ".17g"),
                        "is_min": int((i, j) == best),
                    }
                )
    logger.info(f"Wrote sweep CSV to {path}")
    return path


def write_sweep_heatmap(result: SweepResult, path: Path, cell: int = 8) -> Path:
    """Grayscale heatmap, first axis down and second axis across; dark is low error."""
    image = np.kron(result.normalized, np.ones((cell, cell)))
    return save_grayscale(image, path)
