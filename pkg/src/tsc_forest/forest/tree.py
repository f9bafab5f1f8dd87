"""Transformation trees and forests.

A tree holds one unit-norm root feature; every other node is reached by an
edge carrying six transformation parameters. A leaf's feature is the root
transformed by the sum of the edge parameters on its root path. Node 0 is
the root and an edge is identified by its child node.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from tsc_forest.liegroup import NUM_GENERATORS
from tsc_forest.models import ForestLayout

logger = logging.getLogger(__name__)

ROOT = 0


class ForestError(ValueError):
    """Invalid forest structure or dimensions."""

    pass


@dataclass(frozen=True, eq=False)
class Tree:
    """One root feature plus parameterised edges.

    Attributes:
        root: Root feature ``F_v`` (``M``-vector)
        parents: ``parents[n]`` is the parent of node ``n``; ``parents[0] == -1``
        edge_params: ``(num_nodes, 6)``; row ``n`` holds the edge into node ``n``
    """

    root: np.ndarray
    parents: tuple[int, ...]
    edge_params: np.ndarray

    def __post_init__(self):
        num_nodes = len(self.parents)
        if num_nodes < 2:
            raise ForestError("A tree needs at least one edge")
        if self.parents[ROOT] != -1:
            raise ForestError("Node 0 must be the root")
        if self.edge_params.shape != (num_nodes, NUM_GENERATORS):
            raise ForestError(
                f"edge_params must be {num_nodes}x{NUM_GENERATORS}, got {self.edge_params.shape}"
            )
        if self.root.ndim != 1:
            raise ForestError("Root must be a vector")
        for node, parent in enumerate(self.parents[1:], start=1):
            if not 0 <= parent < num_nodes or parent == node:
                raise ForestError(f"Edge into node {node} references unknown parent {parent}")
        for node in range(1, num_nodes):
            self._walk_to_root(node)

    def _walk_to_root(self, node: int) -> list[int]:
        path = []
        while node != ROOT:
            path.append(node)
            if len(path) > len(self.parents):
                raise ForestError("Tree contains a cycle")
            node = self.parents[node]
        return path

    @property
    def num_nodes(self) -> int:
        return len(self.parents)

    @property
    def num_edges(self) -> int:
        return len(self.parents) - 1

    @cached_property
    def children(self) -> dict[int, list[int]]:
        kids: dict[int, list[int]] = {n: [] for n in range(self.num_nodes)}
        for node, parent in enumerate(self.parents[1:], start=1):
            kids[parent].append(node)
        return kids

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(n for n in range(1, self.num_nodes) if not self.children[n])

    def path(self, node: int) -> list[int]:
        """Edges (child node ids) from the root down to ``node``."""
        if not 0 <= node < self.num_nodes:
            raise ForestError(f"Unknown node {node}")
        return self._walk_to_root(node)[::-1]

    def shape(self) -> Optional[tuple[int, int]]:
        """``(branching, depth)`` if the tree is complete, else ``None``."""
        internal = [n for n in range(self.num_nodes) if self.children[n]]
        counts = {len(self.children[n]) for n in internal}
        depths = {len(self._walk_to_root(leaf)) for leaf in self.leaves}
        if len(counts) == 1 and len(depths) == 1:
            return counts.pop(), depths.pop()
        return None

    def with_root(self, root: np.ndarray) -> "Tree":
        return replace(self, root=np.asarray(root, dtype=np.float64))

    def with_edge_params(self, edge_params: np.ndarray) -> "Tree":
        edge_params = np.array(edge_params, dtype=np.float64)
        edge_params[ROOT] = 0.0
        return replace(self, edge_params=edge_params)


def path_params(tree: Tree, leaf: int) -> np.ndarray:
    """Sum of edge parameters on the root-to-``leaf`` path.

    Raises:
        ForestError: If ``leaf`` is not a node of the tree
    """
    return tree.edge_params[tree.path(leaf)].sum(axis=0)


def complete_parents(branching: int, depth: int) -> tuple[int, ...]:
    """Parent array of a complete ``branching``-ary tree, nodes in breadth-first order."""
    parents = [-1]
    level = [ROOT]
    for _ in range(depth):
        next_level = []
        for node in level:
            for _ in range(branching):
                parents.append(node)
                next_level.append(len(parents) - 1)
        level = next_level
    return tuple(parents)


def make_tree(root: np.ndarray, parents: Sequence[int], edge_params: Optional[np.ndarray] = None) -> Tree:
    parents = tuple(int(p) for p in parents)
    if edge_params is None:
        edge_params = np.zeros((len(parents), NUM_GENERATORS))
    edge_params = np.array(edge_params, dtype=np.float64)
    if edge_params.shape == (len(parents) - 1, NUM_GENERATORS):
        edge_params = np.vstack([np.zeros(NUM_GENERATORS), edge_params])
    return Tree(root=np.asarray(root, dtype=np.float64), parents=parents, edge_params=edge_params)


@dataclass(frozen=True, eq=False)
class Forest:
    """Trees sharing one patch size. Leaves are ordered tree-major, leaf-minor."""

    side: int
    trees: tuple[Tree, ...]
    _layout: Optional[ForestLayout] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.trees:
            raise ForestError("A forest needs at least one tree")
        for t, tree in enumerate(self.trees):
            if tree.root.size != self.pixels:
                raise ForestError(
                    f"Tree {t} root has {tree.root.size} entries, expected {self.pixels}"
                )

    @property
    def pixels(self) -> int:
        return self.side * self.side

    @property
    def num_trees(self) -> int:
        return len(self.trees)

    @cached_property
    def leaf_index(self) -> tuple[tuple[int, int], ...]:
        """``(tree, leaf node)`` for every dictionary column."""
        return tuple((t, leaf) for t, tree in enumerate(self.trees) for leaf in tree.leaves)

    @property
    def leaf_count(self) -> int:
        return len(self.leaf_index)

    @property
    def num_edges(self) -> int:
        return sum(tree.num_edges for tree in self.trees)

    @property
    def layout(self) -> Optional[ForestLayout]:
        """Uniform layout of the forest, if every tree is complete with the same shape."""
        if self._layout is not None:
            return self._layout
        shapes = {tree.shape() for tree in self.trees}
        if len(shapes) == 1 and None not in shapes:
            branching, depth = shapes.pop()
            return ForestLayout(trees=self.num_trees, branching=branching, depth=depth)
        return None

    def tree_columns(self, t: int) -> list[int]:
        """Dictionary columns owned by tree ``t``."""
        return [k for k, (owner, _) in enumerate(self.leaf_index) if owner == t]

    def roots(self) -> np.ndarray:
        """``M x V`` matrix of root features."""
        return np.stack([tree.root for tree in self.trees], axis=1)

    def edge_matrix(self) -> np.ndarray:
        """All edge parameters stacked, ``(num_edges, 6)``."""
        return np.vstack([tree.edge_params[1:] for tree in self.trees])

    def with_trees(self, trees: Sequence[Tree]) -> "Forest":
        return Forest(side=self.side, trees=tuple(trees), _layout=self._layout)

    @classmethod
    def initialize(
        cls,
        layout: ForestLayout,
        side: int,
        rng: np.random.Generator,
        init_sigma: float = 0.05,
    ) -> "Forest":
        """Random unit-norm roots with edge parameters drawn from ``N(0, init_sigma**2)``."""
        parents = complete_parents(layout.branching, layout.depth)
        trees = []
        for _ in range(layout.trees):
            root = rng.standard_normal(side * side)
            root /= np.linalg.norm(root)
            params = init_sigma * rng.standard_normal((len(parents) - 1, NUM_GENERATORS))
            trees.append(make_tree(root, parents, params))
        logger.info(
            f"Initialised {layout.label} forest (depth {layout.depth}, "
            f"{layout.leaf_count} leaves) for {side}x{side} patches"
        )
        return cls(side=side, trees=tuple(trees), _layout=layout)
