"""Feature grid images."""

import logging
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np

from tsc_forest.dataio import save_grayscale
from tsc_forest.forest import Forest, materialize_leaves
from tsc_forest.liegroup import NUM_GENERATORS, GeneratorSet, transform_matrix
from tsc_forest.presets import SWEEP_RANGES

logger = logging.getLogger(__name__)

MID_GRAY = 128
SEPARATOR = 0


def normalize_cell(feature: np.ndarray) -> np.ndarray:
    """Stretch one feature to 0..255; a constant feature becomes mid-gray."""
    low, high = float(feature.min()), float(feature.max())
    if high - low <= 1e-12 * max(1.0, abs(high)):
        return np.full(feature.shape, MID_GRAY, dtype=np.uint8)
    return np.rint((feature - low) / (high - low) * 255.0).astype(np.uint8)


def feature_grid(rows: Sequence[Sequence[np.ndarray]], side: int) -> np.ndarray:
    """Tile flattened features into a grid with 1-pixel separators.

    Each row of ``rows`` becomes one image row; shorter rows are padded with
    separator color.
    """
    if not rows or not any(rows):
        raise ValueError("Nothing to draw")
    num_rows = len(rows)
    num_cols = max(len(r) for r in rows)
    grid = np.full(
        (num_rows * side + num_rows - 1, num_cols * side + num_cols - 1),
        SEPARATOR,
        dtype=np.uint8,
    )
    for i, row in enumerate(rows):
        for j, feature in enumerate(row):
            top, left = i * (side + 1), j * (side + 1)
            grid[top : top + side, left : left + side] = normalize_cell(
                np.asarray(feature).reshape(side, side)
            )
    return grid


def forest_grid(
    forest: Forest, gens: GeneratorSet, mode: Literal["leaves", "roots"] = "leaves"
) -> np.ndarray:
    """One row per tree with its leaves, or a single row of roots."""
    if mode == "roots":
        return feature_grid([[tree.root for tree in forest.trees]], forest.side)
    if mode != "leaves":
        raise ValueError(f"Unknown export mode '{mode}'")

    leaves = materialize_leaves(forest, gens)
    rows = [[leaves[:, k] for k in forest.tree_columns(t)] for t in range(forest.num_trees)]
    return feature_grid(rows, forest.side)


def export_features(
    forest: Forest,
    gens: GeneratorSet,
    path: Path,
    mode: Literal["leaves", "roots"] = "leaves",
) -> Path:
    """Write the feature grid of ``forest`` as a binary PGM."""
    grid = forest_grid(forest, gens, mode)
    logger.info(f"Exporting {mode} grid ({grid.shape[1]}x{grid.shape[0]}) to {path}")
    return save_grayscale(grid, path)


def square_template(side: int) -> np.ndarray:
    """Flattened mean-subtracted bright square covering the middle half of the patch."""
    image = np.zeros((side, side))
    low, high = side // 4, side - side // 4
    image[low:high, low:high] = 1.0
    image = image.reshape(-1)
    return image - image.mean()


def generator_grid(
    gens: GeneratorSet, template: Optional[np.ndarray] = None, points: int = 7
) -> np.ndarray:
    """One row per generator: ``T(x_j e_j) template`` over that generator's sweep range.

    Raises:
        ValueError: If fewer than 2 points are requested or the template has the wrong size
    """
    if points < 2:
        raise ValueError("A generator row needs at least 2 points")
    side = gens.side
    template = square_template(side) if template is None else np.asarray(template, dtype=np.float64)
    if template.size != gens.pixels:
        raise ValueError(f"Template has {template.size} pixels, generators expect {gens.pixels}")

    rows = []
    for j in range(NUM_GENERATORS):
        row = []
        for magnitude in np.linspace(*SWEEP_RANGES[j + 1], points):
            x = np.zeros(NUM_GENERATORS)
            x[j] = magnitude
            row.append(transform_matrix(gens, x) @ template.reshape(-1))
        rows.append(row)
    return feature_grid(rows, side)


def export_generator_effects(gens: GeneratorSet, path: Path, points: int = 7) -> Path:
    """Write the generator-effects grid for a square template as a binary PGM."""
    grid = generator_grid(gens, points=points)
    logger.info(f"Exporting generator effects ({grid.shape[1]}x{grid.shape[0]}) to {path}")
    return save_grayscale(grid, path)
