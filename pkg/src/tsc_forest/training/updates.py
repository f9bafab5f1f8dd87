"""Transformation and root updates for a fixed set of weights."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import LinAlgError, solve

from tsc_forest.dataio.batch import PatchBatch
from tsc_forest.forest import (
    Forest,
    LeafOverflowError,
    leaf_params,
    leaf_transforms,
    materialize_leaves,
    param_penalties,
    reconstruction_mse,
)
from tsc_forest.liegroup import (
    GeneratorSet,
    Quadrature,
    TransformOverflowError,
    clamp_params,
    matexp_param_grad_outer,
)
from tsc_forest.models import Penalties

logger = logging.getLogger(__name__)

SINGULAR_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class TransformGradients:
    """Per-tree edge gradients, ``(num_nodes, 6)`` each with row 0 unused."""

    per_tree: list[np.ndarray]
    skipped: list[set[int]]

    @property
    def skipped_edges(self) -> int:
        return sum(len(s) for s in self.skipped)


@dataclass(frozen=True, eq=False)
class TransformStep:
    """Outcome of one (possibly backtracked) transformation step."""

    forest: Forest
    learning_rate: float
    halvings: int
    skipped_edges: int
    accepted: bool


def _leaf_gradient(
    gens: GeneratorSet,
    x: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    quadrature: Quadrature,
    rng: np.random.Generator,
) -> Optional[np.ndarray]:
    try:
        return matexp_param_grad_outer(gens, x, left, right, quadrature, rng)
    except TransformOverflowError:
        return None


def transform_gradients(
    forest: Forest,
    gens: GeneratorSet,
    batch: PatchBatch,
    weights: np.ndarray,
    penalties: Penalties,
    quadrature: Quadrature,
    rng: Optional[np.random.Generator] = None,
    transforms: Optional[np.ndarray] = None,
    workers: int = 1,
) -> TransformGradients:
    """Gradient of the full loss with respect to every edge parameter.

    The MSE cotangent for leaf ``b`` is ``-(2/N) (R^T w_b) F_v^T`` with ``R``
    the batch residual. An edge receives the sum of the leaf gradients of
    every leaf below it, plus ``2 lambda_j x_j``.

    Args:
        forest: Current forest
        gens: Generators for the forest's patch size
        batch: Patches the weights were inferred on
        weights: ``N x K`` weights
        penalties: Parameter penalties (``lambda_w`` is unused here)
        quadrature: Rule for the exponential gradient
        rng: Random generator; split into one stream per leaf
        transforms: Optional precomputed leaf transforms
        workers: Threads used for the per-leaf gradients

    Returns:
        TransformGradients; edges whose leaf exponential overflowed are skipped
    """
    if transforms is None:
        transforms = leaf_transforms(forest, gens)
    leaves = materialize_leaves(forest, gens, transforms)
    residual = batch.patches - weights @ leaves.T
    params = leaf_params(forest)
    # One stream per leaf keeps results independent of the worker count.
    leaf_rngs = rng.spawn(forest.leaf_count) if rng is not None else [None] * forest.leaf_count

    jobs = []
    for k, (t, _) in enumerate(forest.leaf_index):
        column = weights[:, k]
        if not np.any(column):
            jobs.append(None)
            continue
        left = -(2.0 / batch.size) * (residual.T @ column)
        jobs.append((params[k], left, forest.trees[t].root, leaf_rngs[k]))

    active = [k for k, job in enumerate(jobs) if job is not None]
    if workers > 1 and len(active) > 1:
        results = Parallel(n_jobs=workers, prefer="threads")(
            delayed(_leaf_gradient)(gens, *jobs[k][:3], quadrature, jobs[k][3]) for k in active
        )
    else:
        results = [_leaf_gradient(gens, *jobs[k][:3], quadrature, jobs[k][3]) for k in active]
    leaf_grads: dict[int, Optional[np.ndarray]] = dict(zip(active, results))

    per_tree = [np.zeros_like(tree.edge_params) for tree in forest.trees]
    skipped: list[set[int]] = [set() for _ in forest.trees]
    for k, (t, leaf) in enumerate(forest.leaf_index):
        if k not in leaf_grads:
            continue
        grad = leaf_grads[k]
        path = forest.trees[t].path(leaf)
        if grad is None:
            logger.warning(f"Transform overflow at tree {t} leaf {leaf}; skipping edges {path}")
            skipped[t].update(path)
            continue
        per_tree[t][path] += grad

    lambdas = np.asarray(penalties.lambda_params)
    for t, tree in enumerate(forest.trees):
        per_tree[t][1:] += 2.0 * lambdas * tree.edge_params[1:]
        per_tree[t][0] = 0.0
        if skipped[t]:
            per_tree[t][sorted(skipped[t])] = 0.0

    return TransformGradients(per_tree=per_tree, skipped=skipped)


def _apply_step(forest: Forest, grads: TransformGradients, eta: float, x_max: float) -> Forest:
    trees = []
    for tree, grad in zip(forest.trees, grads.per_tree):
        trees.append(tree.with_edge_params(clamp_params(tree.edge_params - eta * grad, x_max)))
    return forest.with_trees(trees)


def fixed_weight_objective(
    forest: Forest,
    gens: GeneratorSet,
    batch: PatchBatch,
    weights: np.ndarray,
    penalties: Penalties,
) -> float:
    """MSE plus parameter penalties; infinite if any leaf overflows."""
    try:
        leaves = materialize_leaves(forest, gens)
    except LeafOverflowError:
        return float("inf")
    return reconstruction_mse(leaves, batch, weights) + sum(param_penalties(forest, penalties))


def step_transforms(
    forest: Forest,
    gens: GeneratorSet,
    batch: PatchBatch,
    weights: np.ndarray,
    penalties: Penalties,
    learning_rate: float,
    quadrature: Quadrature,
    rng: Optional[np.random.Generator] = None,
    x_max: float = 5.0,
    backtracking: bool = True,
    max_halvings: int = 10,
    workers: int = 1,
    transforms: Optional[np.ndarray] = None,
) -> TransformStep:
    """One gradient step on every edge parameter, with optional backtracking.

    With backtracking the step size is halved until the fixed-weight loss
    does not increase; if ``max_halvings`` halvings all fail, the forest is
    returned unchanged.
    """
    grads = transform_gradients(
        forest, gens, batch, weights, penalties, quadrature, rng, transforms, workers
    )
    if not backtracking:
        candidate = _apply_step(forest, grads, learning_rate, x_max)
        return TransformStep(candidate, learning_rate, 0, grads.skipped_edges, True)

    current = fixed_weight_objective(forest, gens, batch, weights, penalties)
    eta = learning_rate
    for halvings in range(max_halvings + 1):
        candidate = _apply_step(forest, grads, eta, x_max)
        value = fixed_weight_objective(candidate, gens, batch, weights, penalties)
        if value <= current:
            logger.debug(f"Transform step accepted at eta={eta:.4g} ({current:.6g} -> {value:.6g})")
            return TransformStep(candidate, eta, halvings, grads.skipped_edges, True)
        eta /= 2.0

    logger.debug(f"No decrease after {max_halvings} halvings; transforms unchanged")
    return TransformStep(forest, 0.0, max_halvings, grads.skipped_edges, False)


def update_transforms(
    forest: Forest,
    gens: GeneratorSet,
    batch: PatchBatch,
    weights: np.ndarray,
    penalties: Penalties,
    learning_rate: float,
    quadrature: Quadrature,
    rng: Optional[np.random.Generator] = None,
    **kwargs,
) -> Forest:
    """Forest after one transformation step (see :func:`step_transforms`)."""
    return step_transforms(
        forest, gens, batch, weights, penalties, learning_rate, quadrature, rng, **kwargs
    ).forest


def solve_root(
    transforms: np.ndarray, weights: np.ndarray, target: np.ndarray
) -> Optional[np.ndarray]:
    """Least-squares root for one tree, before normalisation.

    Minimises ``sum_i ||target_i - sum_b w_ib T_b F||^2`` over ``F`` through
    the normal equations ``(sum_bc Q_bc T_b^T T_c) F = sum_b T_b^T (target^T W)_b``
    with ``Q = W^T W``.

    Args:
        transforms: ``(B, M, M)`` leaf transforms of the tree
        weights: ``N x B`` weights of those leaves
        target: ``N x M`` residual excluding the other trees

    Returns:
        The solution, or ``None`` if the tree is unused or the system singular
    """
    num_leaves, pixels, _ = transforms.shape
    q = weights.T @ weights
    if not np.any(q):
        return None

    mixed = np.tensordot(q, transforms, axes=(0, 0))
    normal = mixed.reshape(num_leaves * pixels, pixels).T @ transforms.reshape(
        num_leaves * pixels, pixels
    )
    rhs = np.einsum("bmi,mb->i", transforms, target.T @ weights)

    if np.linalg.cond(normal) > SINGULAR_CONDITION:
        return None
    try:
        return solve(normal, rhs, assume_a="sym")
    except LinAlgError:
        return None


def update_roots(
    forest: Forest,
    gens: GeneratorSet,
    batch: PatchBatch,
    weights: np.ndarray,
    transforms: Optional[np.ndarray] = None,
) -> Forest:
    """Block coordinate descent over roots in tree order, then unit-norm projection.

    Each root is solved against the residual left by all other trees, using
    the already-updated (unnormalised) roots of earlier trees.
    """
    if transforms is None:
        transforms = leaf_transforms(forest, gens)
    leaves = materialize_leaves(forest, gens, transforms)

    columns = [forest.tree_columns(t) for t in range(forest.num_trees)]
    recon = [weights[:, cols] @ leaves[:, cols].T for cols in columns]
    total = sum(recon)
    roots = [tree.root for tree in forest.trees]

    for t, cols in enumerate(columns):
        target = batch.patches - (total - recon[t])
        solution = solve_root(transforms[cols], weights[:, cols], target)
        if solution is None or not np.linalg.norm(solution) > 0.0:
            logger.warning(f"Root {t} unused or singular; left unchanged")
            continue
        updated = weights[:, cols] @ np.einsum("bmn,n->bm", transforms[cols], solution)
        total = total + updated - recon[t]
        recon[t] = updated
        roots[t] = solution

    trees = [
        tree.with_root(root / np.linalg.norm(root)) for tree, root in zip(forest.trees, roots)
    ]
    return forest.with_trees(trees)
