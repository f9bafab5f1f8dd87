"""Transformational sparse coding forests."""

from tsc_forest.forest.dof import dof_forest, dof_sc, dof_tsc
from tsc_forest.forest.objective import (
    LeafOverflowError,
    average_leaf_norm,
    leaf_params,
    leaf_transforms,
    loss,
    materialize_leaves,
    param_penalties,
    reconstruction_mse,
)
from tsc_forest.forest.tree import (
    Forest,
    ForestError,
    Tree,
    complete_parents,
    make_tree,
    path_params,
)

__all__ = [
    "Forest",
    "ForestError",
    "LeafOverflowError",
    "Tree",
    "average_leaf_norm",
    "complete_parents",
    "dof_forest",
    "dof_sc",
    "dof_tsc",
    "leaf_params",
    "leaf_transforms",
    "loss",
    "make_tree",
    "materialize_leaves",
    "param_penalties",
    "path_params",
    "reconstruction_mse",
]
