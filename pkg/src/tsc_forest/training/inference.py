"""Batch weight inference over a fixed dictionary."""

import logging
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from tsc_forest.dataio.batch import PatchBatch
from tsc_forest.forest import reconstruction_mse
from tsc_forest.solver import SolverConvergenceError, SolverError, feature_sign

logger = logging.getLogger(__name__)


class TrainingError(Exception):
    """Training error."""

    pass


class InferenceError(TrainingError):
    """Sparse inference failed for one datum."""

    def __init__(self, message: str, index: int):
        self.index = index
        super().__init__(message)


def _infer_rows(
    dictionary: np.ndarray,
    gram: np.ndarray,
    signals: np.ndarray,
    start: int,
    lambda_w: float,
    max_iter: Optional[int],
) -> np.ndarray:
    weights = np.zeros((signals.shape[0], dictionary.shape[1]))
    for offset, signal in enumerate(signals):
        try:
            weights[offset] = feature_sign(
                dictionary, signal, lambda_w, max_iter=max_iter, gram=gram
            ).w
        except SolverConvergenceError as e:
            raise InferenceError(f"Datum {start + offset}: {e}", index=start + offset)
    return weights


def infer_weights(
    dictionary: np.ndarray,
    batch: PatchBatch,
    lambda_w: float,
    max_iter: Optional[int] = None,
    workers: int = 1,
) -> np.ndarray:
    """Solve the L1 problem independently for every patch.

    Args:
        dictionary: ``M x K`` leaf (or SC) dictionary
        batch: Patches to encode
        lambda_w: Sparsity penalty
        max_iter: Per-datum active-set iteration cap
        workers: Threads used for inference; results do not depend on it

    Returns:
        ``N x K`` weight matrix, row ``i`` for patch ``i``

    Raises:
        SolverError: On dimension mismatch
        InferenceError: If a datum's solve does not converge
    """
    dictionary = np.asarray(dictionary, dtype=np.float64)
    if dictionary.ndim != 2 or dictionary.shape[0] != batch.pixels:
        raise SolverError(
            f"Dictionary shape {dictionary.shape} does not match {batch.pixels}-pixel patches"
        )

    gram = dictionary.T @ dictionary
    if workers <= 1 or batch.size < 2:
        return _infer_rows(dictionary, gram, batch.patches, 0, lambda_w, max_iter)

    chunks = np.array_split(np.arange(batch.size), min(workers, batch.size))
    parts = Parallel(n_jobs=workers, prefer="threads")(
        delayed(_infer_rows)(dictionary, gram, batch.patches[idx], int(idx[0]), lambda_w, max_iter)
        for idx in chunks
        if idx.size
    )
    return np.vstack(parts)


def usage_fractions(weights: np.ndarray) -> np.ndarray:
    """Fraction of data points with a nonzero weight on each column."""
    weights = np.asarray(weights)
    if weights.shape[0] == 0:
        return np.zeros(weights.shape[1])
    return (weights != 0.0).mean(axis=0)


def average_sparsity(weights: np.ndarray) -> float:
    """Mean number of nonzero weights per data point."""
    weights = np.asarray(weights)
    if weights.shape[0] == 0:
        return 0.0
    return float((weights != 0.0).sum(axis=1).mean())


def evaluate_dictionary(
    dictionary: np.ndarray,
    batch: PatchBatch,
    lambda_w: float,
    max_iter: Optional[int] = None,
    workers: int = 1,
) -> tuple[float, float]:
    """Infer weights for ``batch`` and report ``(mse, sparsity)``."""
    weights = infer_weights(dictionary, batch, lambda_w, max_iter=max_iter, workers=workers)
    return reconstruction_mse(dictionary, batch, weights), average_sparsity(weights)
