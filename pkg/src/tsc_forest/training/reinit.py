"""Re-initialisation of under-used leaves."""

import logging

import numpy as np

from tsc_forest.forest import Forest, path_params
from tsc_forest.models import ReinitEvent

logger = logging.getLogger(__name__)


def sample_donor(usage: np.ndarray, rng: np.random.Generator) -> int:
    """Pick an index with probability proportional to ``usage``."""
    usage = np.asarray(usage, dtype=np.float64)
    total = usage.sum()
    if usage.size == 0 or total <= 0.0:
        raise ValueError("Cannot sample a donor without positive usage")
    return int(rng.choice(usage.size, p=usage / total))


def reinit_underused(
    forest: Forest,
    usage: np.ndarray,
    rng: np.random.Generator,
    threshold: float = 0.005,
    sigma: float = 0.1,
    epoch: int = 0,
) -> tuple[Forest, list[ReinitEvent]]:
    """Move every under-used leaf next to a well-used sibling.

    A leaf whose usage fraction is below ``threshold`` gets the path
    parameters of a donor leaf from the same tree plus ``N(0, sigma**2)``
    noise; only the leaf's own edge changes. Donors are drawn with
    probability proportional to usage. If every leaf of a tree is
    under-used, the new path parameters are centred on zero instead.

    Args:
        forest: Current forest
        usage: Per-leaf usage fractions in column order
        rng: Random generator
        threshold: Usage fraction below which a leaf is re-initialised
        sigma: Standard deviation of the reset noise
        epoch: Epoch number stamped on the events

    Returns:
        The updated forest and one event per re-initialised leaf
    """
    usage = np.asarray(usage, dtype=np.float64)
    if usage.shape != (forest.leaf_count,):
        raise ValueError(f"Expected {forest.leaf_count} usage fractions, got {usage.shape}")

    events: list[ReinitEvent] = []
    trees = list(forest.trees)
    for t, tree in enumerate(forest.trees):
        cols = forest.tree_columns(t)
        tree_usage = usage[cols]
        dead = [i for i, u in enumerate(tree_usage) if u < threshold]
        if not dead:
            continue
        live = [i for i, u in enumerate(tree_usage) if u >= threshold]

        params = tree.edge_params.copy()
        for i in dead:
            leaf = tree.leaves[i]
            if live:
                donor = live[sample_donor(tree_usage[live], rng)]
                centre = path_params(tree, tree.leaves[donor])
            else:
                donor = None
                centre = np.zeros(params.shape[1])
            target = centre + sigma * rng.standard_normal(params.shape[1])
            parent = tree.parents[leaf]
            params[leaf] = target - path_params(tree, parent)
            events.append(
                ReinitEvent(
                    epoch=epoch,
                    tree=t,
                    leaf=leaf,
                    donor=None if donor is None else tree.leaves[donor],
                    usage=float(tree_usage[i]),
                )
            )
            logger.debug(
                f"Re-initialised tree {t} leaf {leaf} "
                f"(usage {tree_usage[i]:.4f}, donor {events[-1].donor})"
            )
        trees[t] = tree.with_edge_params(params)

    if events:
        logger.info(f"Re-initialised {len(events)} under-used leaves at epoch {epoch}")
    return forest.with_trees(trees), events
