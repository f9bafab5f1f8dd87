"""TSC vs sparse-coding comparison at equal feature count."""

import csv
import logging
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from tsc_forest.config import Config
from tsc_forest.dataio import DataError, PatchBatch
from tsc_forest.forest import average_leaf_norm, dof_forest, dof_sc, materialize_leaves
from tsc_forest.liegroup import build_generators
from tsc_forest.models import ComparisonRow, ForestLayout
from tsc_forest.training import evaluate_dictionary, train, train_sc_baseline

logger = logging.getLogger(__name__)

# Column order of the comparison CSV; the first ten follow the published table.
COMPARISON_COLUMNS: tuple[str, ...] = (
    "lambda_w",
    "layout",
    "tsc_mse",
    "tsc_sparsity",
    "df_tsc",
    "sc_mse",
    "sc_sparsity",
    "df_sc",
    "num_features",
    "df_ratio",
    "tsc_train_mse",
    "sc_train_mse",
    "note",
)

_FORMATS = {
    "lambda_w": "{:g}",
    "tsc_mse": "{:.4f}",
    "tsc_sparsity": "{:.2f}",
    "sc_mse": "{:.4f}",
    "sc_sparsity": "{:.2f}",
    "df_ratio": "{:.2f}",
    "tsc_train_mse": "{:.4f}",
    "sc_train_mse": "{:.4f}",
}


def parse_row_spec(text: str) -> tuple[float, ForestLayout]:
    """Parse ``LAMBDA:VxB`` (e.g. ``0.4:8x8``)."""
    try:
        lam, layout = text.split(":", 1)
        return float(lam), ForestLayout.parse(layout)
    except ValueError as e:
        raise ValueError(f"Invalid comparison row '{text}', expected e.g. 0.4:8x8 ({e})")


def compare_row(
    train_pool: PatchBatch,
    holdout: PatchBatch,
    lambda_w: float,
    layout: ForestLayout,
    config: Config,
) -> ComparisonRow:
    """Train TSC, then SC at the TSC model's average leaf norm, and evaluate both.

    MSE and sparsity in the table columns are measured on ``holdout``; the
    training-set MSE is measured on a training sample of the same size.
    """
    train_config = config.train.model_copy(
        update={
            "lambda_w": lambda_w,
            "trees": layout.trees,
            "branching": layout.branching,
            "depth": layout.depth,
        }
    )
    max_iter = train_config.solver_max_iter
    workers = train_config.workers

    forest, _ = train(train_config, train_pool)
    gens = build_generators(train_config.side)
    leaves = materialize_leaves(forest, gens)
    magnitude = average_leaf_norm(forest, gens)

    train_sample = train_pool.sample(holdout.size, np.random.default_rng(train_config.seed))
    tsc_mse, tsc_sparsity = evaluate_dictionary(leaves, holdout, lambda_w, max_iter, workers)
    tsc_train_mse, _ = evaluate_dictionary(leaves, train_sample, lambda_w, max_iter, workers)

    num_features = forest.leaf_count
    dictionary, _ = train_sc_baseline(train_pool, num_features, lambda_w, magnitude, train_config)
    sc_mse, sc_sparsity = evaluate_dictionary(dictionary, holdout, lambda_w, max_iter, workers)
    sc_train_mse, _ = evaluate_dictionary(dictionary, train_sample, lambda_w, max_iter, workers)

    df_tsc = dof_forest(forest, config.bench.group_dim)
    df_sc = dof_sc(num_features, train_pool.pixels)
    return ComparisonRow(
        lambda_w=lambda_w,
        layout=layout.label,
        tsc_mse=tsc_mse,
        tsc_sparsity=tsc_sparsity,
        df_tsc=df_tsc,
        sc_mse=sc_mse,
        sc_sparsity=sc_sparsity,
        df_sc=df_sc,
        num_features=num_features,
        df_ratio=df_sc / df_tsc,
        tsc_train_mse=tsc_train_mse,
        sc_train_mse=sc_train_mse,
        note=f"magnitude={magnitude:.4f}",
    )


def run_comparison(
    pool: PatchBatch,
    rows: Sequence[tuple[float, ForestLayout]],
    config: Config,
    on_progress: Optional[Callable[[str], None]] = None,
) -> tuple[list[ComparisonRow], list[tuple[str, str]]]:
    """Run every comparison row on one seeded train/held-out split.

    Rows run in order; a failing row is logged and reported, and the
    remaining rows still run.

    Returns:
        ``(rows, failures)`` where each failure is ``(row label, error message)``
    """
    if pool.side != config.train.side:
        raise DataError(f"Patches are {pool.side}x{pool.side}, config expects side {config.train.side}")
    train_pool, holdout = pool.split(
        config.bench.holdout_fraction, np.random.default_rng(config.train.seed)
    )
    logger.info(f"Comparison split: {train_pool.size} training, {holdout.size} held-out patches")

    results: list[ComparisonRow] = []
    failures: list[tuple[str, str]] = []
    for lambda_w, layout in rows:
        label = f"{lambda_w:g}:{layout.label}"
        if on_progress:
            on_progress(f"Row {label}")
        try:
            results.append(compare_row(train_pool, holdout, lambda_w, layout, config))
        except Exception as e:
            logger.error(f"Comparison row {label} failed: {e}")
            failures.append((label, str(e)))
    return results, failures


def format_row(row: ComparisonRow) -> dict[str, str]:
    """CSV cell strings for ``row``."""
    values = row.model_dump()
    return {
        column: _FORMATS.get(column, "{}").format(values[column]) for column in COMPARISON_COLUMNS
    }


def write_comparison_csv(rows: Sequence[ComparisonRow], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(COMPARISON_COLUMNS))
        writer.writeheader()
        for row in rows:
            writer.writerow(format_row(row))
    logger.info(f"Wrote {len(rows)} comparison rows to {path}")
    return path


def read_comparison_csv(path: Path) -> list[dict[str, str]]:
    """Read the CSV back as strings, in file order.

    Raises:
        DataError: If the file is missing or its header is wrong
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"Comparison CSV not found: {path}")
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != COMPARISON_COLUMNS:
            raise DataError(f"{path}: unexpected header {reader.fieldnames}")
        return list(reader)


def render_comparison_text(path: Path) -> str:
    """Fixed-width text table built from the CSV cells, so both carry the same numbers."""
    records = read_comparison_csv(path)
    widths = {
        column: max([len(column)] + [len(r[column]) for r in records])
        for column in COMPARISON_COLUMNS
    }
    lines = ["  ".join(column.rjust(widths[column]) for column in COMPARISON_COLUMNS)]
    for record in records:
        lines.append("  ".join(record[column].rjust(widths[column]) for column in COMPARISON_COLUMNS))
    return "\n".join(lines) + "\n"
