"""Leaf dictionaries and the full forest loss."""

import logging
from typing import Optional

import numpy as np

from tsc_forest.dataio.batch import PatchBatch
from tsc_forest.forest.tree import Forest, ForestError, path_params
from tsc_forest.liegroup import GeneratorSet, TransformOverflowError, transform_matrix
from tsc_forest.models import LossBreakdown, Penalties

logger = logging.getLogger(__name__)


class LeafOverflowError(ForestError):
    """A leaf transformation overflowed."""

    def __init__(self, message: str, tree: int, leaf: int):
        self.tree = tree
        self.leaf = leaf
        super().__init__(message)


def _check_generators(forest: Forest, gens: GeneratorSet) -> None:
    if gens.side != forest.side:
        raise ForestError(f"Generators are for {gens.side}x{gens.side} patches, forest for {forest.side}x{forest.side}")


def leaf_params(forest: Forest) -> np.ndarray:
    """Path-summed parameters of every leaf, ``(K, 6)`` in column order."""
    return np.array([path_params(forest.trees[t], leaf) for t, leaf in forest.leaf_index])


def leaf_transforms(forest: Forest, gens: GeneratorSet) -> np.ndarray:
    """``T(x_P)`` for every leaf, ``(K, M, M)`` in column order.

    Raises:
        LeafOverflowError: Naming the first leaf whose exponential overflows
    """
    _check_generators(forest, gens)
    transforms = np.empty((forest.leaf_count, forest.pixels, forest.pixels))
    for k, (t, leaf) in enumerate(forest.leaf_index):
        try:
            transforms[k] = transform_matrix(gens, path_params(forest.trees[t], leaf))
        except TransformOverflowError as e:
            raise LeafOverflowError(f"Tree {t} leaf {leaf}: {e}", tree=t, leaf=leaf)
    return transforms


def materialize_leaves(
    forest: Forest, gens: GeneratorSet, transforms: Optional[np.ndarray] = None
) -> np.ndarray:
    """Leaf dictionary ``U`` (``M x K``); column ``b`` is ``T(x_P(b)) F_v``."""
    if transforms is None:
        transforms = leaf_transforms(forest, gens)
    roots = np.stack([forest.trees[t].root for t, _ in forest.leaf_index])
    return np.einsum("kmn,kn->mk", transforms, roots)


def average_leaf_norm(forest: Forest, gens: GeneratorSet) -> float:
    """Mean L2 norm of the leaf features."""
    return float(np.linalg.norm(materialize_leaves(forest, gens), axis=0).mean())


def param_penalties(forest: Forest, penalties: Penalties) -> list[float]:
    """``lambda_j * ||X_[j]||^2`` for each generator ``j``."""
    squares = (forest.edge_matrix() ** 2).sum(axis=0)
    return [float(lam * sq) for lam, sq in zip(penalties.lambda_params, squares)]


def check_weights(batch: PatchBatch, weights: np.ndarray, num_columns: int) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (batch.size, num_columns):
        raise ForestError(
            f"Weights must be {batch.size}x{num_columns}, got {weights.shape}"
        )
    return weights


def reconstruction_mse(dictionary: np.ndarray, batch: PatchBatch, weights: np.ndarray) -> float:
    """``(1/N) sum_i ||I_i - U w_i||^2``."""
    residual = batch.patches - weights @ dictionary.T
    return float((residual**2).sum() / batch.size)


def loss(
    forest: Forest,
    gens: GeneratorSet,
    batch: PatchBatch,
    weights: np.ndarray,
    penalties: Penalties,
    leaves: Optional[np.ndarray] = None,
) -> LossBreakdown:
    """Full loss: MSE + weight penalty + per-generator parameter penalties.

    Args:
        forest: Forest to evaluate
        gens: Generators matching the forest's patch size
        batch: Patches ``I_i``
        weights: ``N x K`` leaf weights
        penalties: ``lambda_w`` and ``lambda_1..6``
        leaves: Optional precomputed leaf dictionary

    Raises:
        ForestError: On dimension mismatch
    """
    if batch.pixels != forest.pixels:
        raise ForestError(f"Batch has {batch.pixels} pixels, forest expects {forest.pixels}")
    weights = check_weights(batch, weights, forest.leaf_count)
    if leaves is None:
        leaves = materialize_leaves(forest, gens)

    mse = reconstruction_mse(leaves, batch, weights)
    weight_penalty = penalties.lambda_w * float(np.abs(weights).sum()) / batch.size
    return LossBreakdown.from_terms(mse, weight_penalty, param_penalties(forest, penalties))
