"""Sparse-coding baseline with features held at a fixed magnitude."""

import logging
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgError, lstsq, solve

from tsc_forest.config import TrainConfig
from tsc_forest.dataio.batch import DataError, PatchBatch
from tsc_forest.forest import reconstruction_mse
from tsc_forest.models import ScEpochRecord, ScMetrics
from tsc_forest.training.inference import TrainingError, average_sparsity, infer_weights

logger = logging.getLogger(__name__)

RIDGE = 1e-10


def project_columns(dictionary: np.ndarray, magnitude: float, columns: np.ndarray) -> np.ndarray:
    """Rescale the selected columns to ``magnitude``; zero columns are left as they are."""
    projected = dictionary.copy()
    norms = np.linalg.norm(projected[:, columns], axis=0)
    scale = np.where(norms > 1e-12, magnitude / np.where(norms > 1e-12, norms, 1.0), 1.0)
    projected[:, columns] *= scale
    return projected


def _least_squares_columns(
    batch: PatchBatch, weights: np.ndarray, lambda_f: float
) -> np.ndarray:
    # D^T = (W^T W + N lambda_f I)^-1 W^T P
    gram = weights.T @ weights
    gram[np.diag_indices_from(gram)] += batch.size * lambda_f + RIDGE
    rhs = weights.T @ batch.patches
    try:
        return solve(gram, rhs, assume_a="pos").T
    except LinAlgError:
        return lstsq(gram, rhs)[0].T


def update_dictionary(
    dictionary: np.ndarray,
    batch: PatchBatch,
    weights: np.ndarray,
    magnitude: float,
    lambda_f: float = 0.0,
    polish_steps: int = 100,
) -> np.ndarray:
    """Norm-constrained dictionary update for fixed weights.

    An unconstrained least-squares update is rescaled to ``magnitude`` and kept
    only if it does not raise the batch MSE, then refined by projected
    gradient steps with backtracking. Columns no datum uses are unchanged.

    Args:
        dictionary: Current ``M x K`` dictionary
        batch: Patches the weights were inferred on
        weights: ``N x K`` weights
        magnitude: Required L2 norm of every used column
        lambda_f: Ridge penalty on the unconstrained update
        polish_steps: Maximum projected-gradient iterations

    Returns:
        Updated dictionary whose batch MSE is no higher than the input's
    """
    used = np.any(weights != 0.0, axis=0)
    if not used.any():
        return dictionary.copy()

    current = dictionary.copy()
    value = reconstruction_mse(current, batch, weights)

    candidate = current.copy()
    candidate[:, used] = _least_squares_columns(batch, weights[:, used], lambda_f)
    candidate = project_columns(candidate, magnitude, used)
    candidate_value = reconstruction_mse(candidate, batch, weights)
    if candidate_value <= value:
        current, value = candidate, candidate_value

    lipschitz = 2.0 * np.linalg.norm(weights.T @ weights, 2) / batch.size
    step = 1.0 / max(lipschitz, 1e-12)
    for _ in range(polish_steps):
        residual = batch.patches - weights @ current.T
        grad = -(2.0 / batch.size) * residual.T @ weights
        grad[:, ~used] = 0.0

        t = step
        improved = False
        for _ in range(30):
            trial = project_columns(current - t * grad, magnitude, used)
            trial_value = reconstruction_mse(trial, batch, weights)
            if trial_value < value:
                improved = True
                break
            t /= 2.0
        if not improved:
            break
        gain = value - trial_value
        current, value = trial, trial_value
        if gain <= 1e-12 * max(value, 1e-300):
            break

    return current


def train_sc_baseline(
    pool: PatchBatch,
    num_features: int,
    lambda_w: float,
    magnitude: float,
    config: TrainConfig,
    on_epoch: Optional[Callable[[ScEpochRecord], None]] = None,
) -> tuple[np.ndarray, ScMetrics]:
    """Learn a sparse-coding dictionary whose features all have norm ``magnitude``.

    Uses the same seed, batch size and batch stream as the TSC trainer; the
    number of epochs is ``config.sc_epochs`` (default ``config.epochs``).

    Args:
        pool: Patch pool
        num_features: Dictionary size ``K``
        lambda_w: Sparsity penalty
        magnitude: Fixed feature norm, usually the TSC model's average leaf norm
        config: Training configuration
        on_epoch: Optional progress callback

    Returns:
        ``M x K`` dictionary and metrics

    Raises:
        TrainingError: If ``magnitude`` is not positive or the loss is non-finite
    """
    if not magnitude > 0.0:
        raise TrainingError(f"Feature magnitude must be positive, got {magnitude}")
    if num_features < 1:
        raise TrainingError("Need at least one feature")
    if pool.size == 0:
        raise DataError("Patch pool is empty")

    init_seq, batch_seq = np.random.SeedSequence(config.seed).spawn(2)
    init_rng = np.random.default_rng(init_seq)
    batch_rng = np.random.default_rng(batch_seq)

    dictionary = init_rng.standard_normal((pool.pixels, num_features))
    dictionary *= magnitude / np.linalg.norm(dictionary, axis=0)

    epochs = config.sc_epochs if config.sc_epochs is not None else config.epochs
    metrics = ScMetrics(magnitude=magnitude)
    logger.info(f"Training SC baseline: {num_features} features at magnitude {magnitude:.4f}")

    for epoch in range(epochs):
        batch = pool.sample(config.batch_size, batch_rng)
        weights = infer_weights(
            dictionary, batch, lambda_w, config.solver_max_iter, config.workers
        )
        mse = reconstruction_mse(dictionary, batch, weights)
        if not np.isfinite(mse):
            raise TrainingError(f"SC epoch {epoch}: non-finite mse")

        dictionary = update_dictionary(dictionary, batch, weights, magnitude, config.lambda_f)
        record = ScEpochRecord(epoch=epoch, mse=mse, sparsity=average_sparsity(weights))
        metrics.epochs.append(record)
        logger.debug(f"SC epoch {epoch}: mse={mse:.5f} sparsity={record.sparsity:.2f}")
        if on_epoch:
            on_epoch(record)

    return dictionary, metrics
