"""Generator names, published forest layouts and sweep presets."""

import math
from typing import TypedDict

# Order is part of the model file format; never reorder.
GENERATOR_NAMES: tuple[str, ...] = (
    "translation_x",
    "translation_y",
    "rotation",
    "scaling",
    "parallel_hyperbolic",
    "diagonal_hyperbolic",
)

# Rigid motions use the first three generators, general affine all six.
GROUP_DIMS: dict[str, int] = {
    "rigid": 3,
    "affine": 6,
}

# Scaling and parallel hyperbolic deformation change feature magnitude,
# so they carry a heavier penalty.
DEFAULT_PENALTY_MULTIPLIERS: tuple[float, ...] = (1.0, 1.0, 1.0, 10.0, 10.0, 1.0)


class LayoutPreset(TypedDict):
    """One row of the published TSC vs SC comparison."""

    lambda_w: float
    trees: int
    branching: int
    tsc_mse: float
    tsc_sparsity: float
    df_tsc: int
    sc_mse: float
    sc_sparsity: float
    df_sc: int
    num_features: int
    df_ratio: float


# Published numbers for 10x10 patches (M = 100), in publication order.
PUBLISHED_ROWS: list[LayoutPreset] = [
    {
        "lambda_w": 0.4, "trees": 1, "branching": 64,
        "tsc_mse": 2.13, "tsc_sparsity": 13.3, "df_tsc": 447,
        "sc_mse": 1.71, "sc_sparsity": 12.3, "df_sc": 6336,
        "num_features": 64, "df_ratio": 14.17,
    },
    {
        "lambda_w": 0.5, "trees": 1, "branching": 128,
        "tsc_mse": 2.28, "tsc_sparsity": 12.1, "df_tsc": 867,
        "sc_mse": 1.96, "sc_sparsity": 10.3, "df_sc": 12672,
        "num_features": 128, "df_ratio": 14.62,
    },
    {
        "lambda_w": 0.4, "trees": 8, "branching": 8,
        "tsc_mse": 1.89, "tsc_sparsity": 13.3, "df_tsc": 1176,
        "sc_mse": 1.72, "sc_sparsity": 12.5, "df_sc": 6336,
        "num_features": 64, "df_ratio": 5.38,
    },
    {
        "lambda_w": 0.4, "trees": 4, "branching": 16,
        "tsc_mse": 1.91, "tsc_sparsity": 13.3, "df_tsc": 780,
        "sc_mse": 1.69, "sc_sparsity": 12.3, "df_sc": 6336,
        "num_features": 64, "df_ratio": 8.12,
    },
    {
        "lambda_w": 0.5, "trees": 8, "branching": 8,
        "tsc_mse": 2.36, "tsc_sparsity": 10.4, "df_tsc": 1176,
        "sc_mse": 2.15, "sc_sparsity": 9.9, "df_sc": 6336,
        "num_features": 64, "df_ratio": 5.38,
    },
    {
        "lambda_w": 0.5, "trees": 4, "branching": 16,
        "tsc_mse": 2.38, "tsc_sparsity": 11.0, "df_tsc": 780,
        "sc_mse": 2.12, "sc_sparsity": 10.0, "df_sc": 6336,
        "num_features": 64, "df_ratio": 8.12,
    },
    {
        "lambda_w": 0.4, "trees": 16, "branching": 16,
        "tsc_mse": 1.66, "tsc_sparsity": 14.3, "df_tsc": 3120,
        "sc_mse": 1.56, "sc_sparsity": 13.2, "df_sc": 25344,
        "num_features": 256, "df_ratio": 8.12,
    },
    {
        "lambda_w": 0.4, "trees": 8, "branching": 32,
        "tsc_mse": 1.67, "tsc_sparsity": 14.6, "df_tsc": 2328,
        "sc_mse": 1.56, "sc_sparsity": 13.2, "df_sc": 25344,
        "num_features": 256, "df_ratio": 10.88,
    },
]

PUBLISHED_PIXELS = 100

# Sweep axis ranges per generator index (1-based).
SWEEP_RANGES: dict[int, tuple[float, float]] = {
    1: (-4.0, 4.0),
    2: (-4.0, 4.0),
    3: (-math.pi / 2, math.pi / 2),
    4: (-1.0, 1.0),
    5: (-1.0, 1.0),
    6: (-1.0, 1.0),
}


def find_published_row(trees: int, branching: int, lambda_w: float | None = None) -> LayoutPreset | None:
    """Look up the published row for a layout (and optionally a penalty)."""
    for row in PUBLISHED_ROWS:
        if row["trees"] != trees or row["branching"] != branching:
            continue
        if lambda_w is None or math.isclose(row["lambda_w"], lambda_w):
            return row
    return None
