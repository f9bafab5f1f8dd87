"""Model checkpoints and metrics files.

Model files are versioned text::

    TSCMODEL 1
    side V
    tree E                 # once per tree
    r_1 ... r_M            # root feature
    parent child x1 .. x6  # E edge lines

Floats are written with 17 significant digits so a save/load round trip is
bit-exact.
"""

import logging
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from tsc_forest.dataio.batch import DataError
from tsc_forest.forest.tree import Forest, ForestError, make_tree
from tsc_forest.liegroup import NUM_GENERATORS
from tsc_forest.models import TrainMetrics

logger = logging.getLogger(__name__)

MODEL_MAGIC = "TSCMODEL"
MODEL_VERSION = 1

METRICS_COLUMNS: tuple[str, ...] = (
    "epoch",
    "mse",
    "weight_penalty",
    "p1",
    "p2",
    "p3",
    "p4",
    "p5",
    "p6",
    "sparsity",
    "reinits",
)


class ModelFormatError(DataError):
    """Malformed model or metrics file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def save_model(forest: Forest, path: Path) -> Path:
    """Write ``forest`` to ``path`` in the text model format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    lines = [f"{MODEL_MAGIC} {MODEL_VERSION}", f"{forest.side} {forest.num_trees}"]
    for tree in forest.trees:
        lines.append(f"tree {tree.num_edges}")
        lines.append(" ".join(_fmt(v) for v in tree.root))
        for child in range(1, tree.num_nodes):
            params = " ".join(_fmt(v) for v in tree.edge_params[child])
            lines.append(f"{tree.parents[child]} {child} {params}")

    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Saved model ({forest.num_trees} trees, {forest.leaf_count} leaves) to {path}")
    return path


class _LineReader:
    def __init__(self, text: str):
        self._lines = [
            (n, line.split())
            for n, line in enumerate(text.splitlines(), start=1)
            if line.strip()
        ]
        self._pos = 0

    def next(self, what: str) -> tuple[int, list[str]]:
        if self._pos >= len(self._lines):
            last = self._lines[-1][0] if self._lines else 0
            raise ModelFormatError(f"unexpected end of file, expected {what}", line=last + 1)
        item = self._lines[self._pos]
        self._pos += 1
        return item

    def remaining(self) -> Iterator[tuple[int, list[str]]]:
        while self._pos < len(self._lines):
            yield self.next("data")


def _ints(tokens: list[str], lineno: int, what: str) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ModelFormatError(f"expected integers for {what}, got '{' '.join(tokens)}'", line=lineno)


def _floats(tokens: list[str], lineno: int, what: str) -> np.ndarray:
    try:
        values = np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError:
        raise ModelFormatError(f"invalid number in {what}", line=lineno)
    if not np.all(np.isfinite(values)):
        raise ModelFormatError(f"non-finite value in {what}", line=lineno)
    return values


def load_model(path: Path) -> Forest:
    """Read a forest written by :func:`save_model`.

    Raises:
        DataError: If the file does not exist
        ModelFormatError: On version mismatch, parse failure (with line number)
            or an inconsistent forest
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"Model file not found: {path}")
    reader = _LineReader(path.read_text(encoding="utf-8"))

    lineno, header = reader.next("header")
    if len(header) != 2 or header[0] != MODEL_MAGIC:
        raise ModelFormatError(f"bad header, expected '{MODEL_MAGIC} {MODEL_VERSION}'", line=lineno)
    if header[1] != str(MODEL_VERSION):
        raise ModelFormatError(
            f"unsupported model version '{header[1]}' (expected {MODEL_VERSION})", line=lineno
        )

    lineno, dims = reader.next("'side V'")
    if len(dims) != 2:
        raise ModelFormatError("expected 'side V'", line=lineno)
    side, num_trees = _ints(dims, lineno, "side and tree count")
    if side < 1 or num_trees < 1:
        raise ModelFormatError("side and tree count must be positive", line=lineno)
    pixels = side * side

    trees = []
    for t in range(num_trees):
        lineno, tree_line = reader.next(f"'tree E' for tree {t}")
        if len(tree_line) != 2 or tree_line[0] != "tree":
            raise ModelFormatError(f"expected 'tree E' for tree {t}", line=lineno)
        (num_edges,) = _ints(tree_line[1:], lineno, "edge count")
        if num_edges < 1:
            raise ModelFormatError(f"tree {t} has no edges", line=lineno)

        lineno, root_tokens = reader.next(f"root of tree {t}")
        if len(root_tokens) != pixels:
            raise ModelFormatError(
                f"root of tree {t} has {len(root_tokens)} values, expected {pixels}", line=lineno
            )
        root = _floats(root_tokens, lineno, f"root of tree {t}")

        num_nodes = num_edges + 1
        parents = [-1] * num_nodes
        params = np.zeros((num_nodes, NUM_GENERATORS))
        seen: set[int] = set()
        for _ in range(num_edges):
            lineno, edge = reader.next(f"edge of tree {t}")
            if len(edge) != 2 + NUM_GENERATORS:
                raise ModelFormatError(
                    f"edge line needs parent, child and {NUM_GENERATORS} parameters", line=lineno
                )
            parent, child = _ints(edge[:2], lineno, "parent and child")
            if not 1 <= child < num_nodes or child in seen:
                raise ModelFormatError(f"edge into unknown or repeated node {child}", line=lineno)
            if not 0 <= parent < num_nodes or parent == child:
                raise ModelFormatError(f"edge references unknown node {parent}", line=lineno)
            seen.add(child)
            parents[child] = parent
            params[child] = _floats(edge[2:], lineno, "edge parameters")

        try:
            trees.append(make_tree(root, parents, params))
        except ForestError as e:
            raise ModelFormatError(f"inconsistent tree {t}: {e}", line=lineno)

    for lineno, _ in reader.remaining():
        raise ModelFormatError("trailing data after last tree", line=lineno)

    forest = Forest(side=side, trees=tuple(trees))
    logger.info(f"Loaded model ({forest.num_trees} trees, {forest.leaf_count} leaves) from {path}")
    return forest


def write_metrics(metrics: TrainMetrics, path: Path) -> Path:
    """Write one ``epoch mse weight_penalty p1..p6 sparsity reinits`` line per epoch."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# " + " ".join(METRICS_COLUMNS)]
    for record in metrics.epochs:
        loss = record.loss
        values = [loss.mse, loss.weight_penalty, *loss.param_penalties, record.sparsity]
        lines.append(
            f"{record.epoch} " + " ".join(_fmt(v) for v in values) + f" {record.reinits}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote {len(metrics.epochs)} metric lines to {path}")
    return path


def read_metrics(path: Path) -> list[dict[str, float]]:
    """Parse a metrics file into one dict per epoch, keyed by column name.

    Raises:
        DataError: If the file does not exist
        ModelFormatError: On malformed lines
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"Metrics file not found: {path}")
    rows = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != len(METRICS_COLUMNS):
            raise ModelFormatError(
                f"expected {len(METRICS_COLUMNS)} columns, got {len(tokens)}", line=lineno
            )
        values = _floats(tokens, lineno, "metrics line")
        rows.append(dict(zip(METRICS_COLUMNS, (float(v) for v in values))))
    return rows
