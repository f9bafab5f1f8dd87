"""Degrees of freedom of TSC forests and sparse-coding dictionaries."""

from tsc_forest.forest.tree import Forest


def dof_tsc(trees: int, branching: int, pixels: int, group_dim: int = 6) -> int:
    """``roots * (pixels - 1 + branching * group_dim)`` for flat forests."""
    return trees * (pixels - 1 + branching * group_dim)


def dof_sc(num_features: int, pixels: int) -> int:
    """``features * (pixels - 1)``; one degree per feature is lost to normalisation."""
    return num_features * (pixels - 1)


def dof_forest(forest: Forest, group_dim: int = 6) -> int:
    """Degrees of freedom of an arbitrary forest: roots plus one parameter set per edge."""
    return forest.num_trees * (forest.pixels - 1) + forest.num_edges * group_dim
