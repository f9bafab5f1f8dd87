"""Tests for trees, forests, the forest loss and degrees of freedom."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tsc_forest.dataio import PatchBatch
from tsc_forest.forest import (
    Forest,
    ForestError,
    Tree,
    average_leaf_norm,
    complete_parents,
    dof_forest,
    dof_sc,
    dof_tsc,
    leaf_params,
    loss,
    make_tree,
    materialize_leaves,
    path_params,
)
from tsc_forest.liegroup import transform_matrix
from tsc_forest.models import ForestLayout, Penalties


def unit(v):
    return v / np.linalg.norm(v)


def test_complete_parents():
    assert complete_parents(3, 1) == (-1, 0, 0, 0)
    assert complete_parents(2, 2) == (-1, 0, 0, 1, 1, 2, 2)


def test_path_params_sums_edges():
    params = np.zeros((6, 6))
    params[0, 0] = 0.1
    params[2, 0] = 0.2
    tree = make_tree(np.ones(4), complete_parents(2, 2), params)
    assert tree.leaves == (3, 4, 5, 6)
    assert path_params(tree, 3)[0] == pytest.approx(0.3)
    assert path_params(tree, 5)[0] == pytest.approx(0.0)
    assert tree.path(4) == [1, 4]
    with pytest.raises(ForestError):
        path_params(tree, 9)


def test_single_edge_path():
    params = np.array([[0.5, -0.2, 0.1, 0.0, 0.0, 0.3]])
    tree = make_tree(np.ones(4), (-1, 0), params)
    assert_allclose(path_params(tree, 1), params[0])


def test_root_edge_row_is_ignored():
    tree = make_tree(np.ones(4), (-1, 0, 0)).with_edge_params(np.ones((3, 6)))
    assert not np.any(tree.edge_params[0])


def test_invalid_trees():
    with pytest.raises(ForestError):
        make_tree(np.ones(4), (-1,))
    with pytest.raises(ForestError):
        make_tree(np.ones(4), (0, 0))
    with pytest.raises(ForestError):
        make_tree(np.ones(4), (-1, 5))
    with pytest.raises(ForestError):
        make_tree(np.ones(4), (-1, 2, 1))
    with pytest.raises(ForestError):
        Tree(root=np.ones(4), parents=(-1, 0), edge_params=np.zeros((3, 6)))


def test_forest_checks_root_size():
    with pytest.raises(ForestError):
        Forest(side=2, trees=(make_tree(np.ones(5), (-1, 0)),))
    with pytest.raises(ForestError):
        Forest(side=2, trees=())


def test_initialize_layout(rng):
    layout = ForestLayout(trees=3, branching=2, depth=2)
    forest = Forest.initialize(layout, 4, rng)
    assert forest.leaf_count == 12
    assert forest.num_edges == 18
    assert forest.layout == layout
    assert forest.tree_columns(1) == [4, 5, 6, 7]
    assert_allclose(np.linalg.norm(forest.roots(), axis=0), 1.0)
    assert forest.edge_matrix().shape == (18, 6)


def test_layout_inferred_from_tree_shape(rng):
    forest = Forest.initialize(ForestLayout(trees=2, branching=3), 4, rng)
    bare = Forest(side=4, trees=forest.trees)
    assert bare.layout == ForestLayout(trees=2, branching=3)


def test_zero_params_leaves_equal_roots(gens4, rng):
    roots = [unit(rng.normal(size=16)) for _ in range(8)]
    forest = Forest(side=4, trees=tuple(make_tree(r, complete_parents(8, 1)) for r in roots))
    leaves = materialize_leaves(forest, gens4)
    assert leaves.shape == (16, 64)
    for t in range(8):
        for k in forest.tree_columns(t):
            assert_allclose(leaves[:, k], roots[t], atol=1e-12)


def test_leaf_is_transformed_root(gens8, band_limited):
    root = unit(band_limited(8, seed=3))
    params = np.zeros((1, 6))
    params[0, 0] = 1.0
    forest = Forest(side=8, trees=(make_tree(root, (-1, 0), params),))
    leaf = materialize_leaves(forest, gens8)[:, 0]
    expected = np.roll(root.reshape(8, 8), 1, axis=1).reshape(-1)
    assert np.linalg.norm(leaf - expected) < 1e-3 * np.linalg.norm(expected)


def test_deep_leaf_uses_path_sum(gens4, rng):
    params = rng.uniform(-0.2, 0.2, size=(6, 6))
    root = unit(rng.normal(size=16))
    forest = Forest(side=4, trees=(make_tree(root, complete_parents(2, 2), params),))
    leaves = materialize_leaves(forest, gens4)
    expected = transform_matrix(gens4, params[0] + params[3]) @ root
    assert_allclose(leaves[:, 1], expected, atol=1e-12)
    assert_allclose(leaf_params(forest)[1], params[0] + params[3])


def test_average_leaf_norm_of_identity_forest(gens4, rng):
    forest = Forest(side=4, trees=(make_tree(unit(rng.normal(size=16)), (-1, 0, 0)),))
    assert average_leaf_norm(forest, gens4) == pytest.approx(1.0)


def _small_problem(gens, seed=0):
    local = np.random.default_rng(seed)
    forest = Forest.initialize(ForestLayout(trees=2, branching=3), 4, local, init_sigma=0.2)
    raw = local.normal(size=(7, 16))
    batch = PatchBatch.from_raw(4, raw, [str(i) for i in range(7)])
    weights = local.normal(size=(7, forest.leaf_count)) * (local.random((7, 6)) < 0.5)
    penalties = Penalties.from_base(0.3, 0.01)
    return forest, batch, weights, penalties


def test_loss_matches_direct_computation(gens4):
    forest, batch, weights, penalties = _small_problem(gens4)
    result = loss(forest, gens4, batch, weights, penalties)

    mse = 0.0
    for i in range(batch.size):
        recon = np.zeros(16)
        for k, (t, leaf) in enumerate(forest.leaf_index):
            tree = forest.trees[t]
            recon += weights[i, k] * (transform_matrix(gens4, path_params(tree, leaf)) @ tree.root)
        mse += np.sum((batch.patches[i] - recon) ** 2)
    mse /= batch.size
    weight_penalty = 0.3 * np.abs(weights).sum() / batch.size
    param_terms = [
        lam * np.sum(forest.edge_matrix()[:, j] ** 2) for j, lam in enumerate(penalties.lambda_params)
    ]

    assert result.mse == pytest.approx(mse, rel=1e-10)
    assert result.weight_penalty == pytest.approx(weight_penalty, rel=1e-12)
    assert_allclose(result.param_penalties, param_terms, rtol=1e-12)
    assert result.total == pytest.approx(mse + weight_penalty + sum(param_terms), rel=1e-10)


def test_zero_weights_loss_is_patch_energy(gens4):
    forest, batch, _, _ = _small_problem(gens4)
    result = loss(forest, gens4, batch, np.zeros((7, 6)), Penalties.zero())
    assert result.mse == pytest.approx((batch.patches**2).sum() / 7)
    assert result.weight_penalty == 0.0
    assert result.total == pytest.approx(result.mse)


def test_perfect_reconstruction_has_zero_loss(gens4, rng):
    roots = [rng.normal(size=16) for _ in range(2)]
    roots = [unit(r - r.mean()) for r in roots]
    forest = Forest(side=4, trees=tuple(make_tree(r, (-1, 0, 0)) for r in roots))
    weights = rng.normal(size=(5, 4))
    leaves = materialize_leaves(forest, gens4)
    batch = PatchBatch(side=4, patches=weights @ leaves.T, sources=tuple("abcde"))
    result = loss(forest, gens4, batch, weights, Penalties.from_base(0.0, 1.0))
    assert result.total < 1e-20


def test_tree_order_does_not_change_mse(gens4):
    forest, batch, weights, penalties = _small_problem(gens4)
    swapped = forest.with_trees(forest.trees[::-1])
    reordered = np.hstack([weights[:, 3:], weights[:, :3]])
    original = loss(forest, gens4, batch, weights, penalties)
    permuted = loss(swapped, gens4, batch, reordered, penalties)
    assert permuted.mse == pytest.approx(original.mse, rel=1e-12)
    assert permuted.total == pytest.approx(original.total, rel=1e-12)


def test_loss_rejects_bad_shapes(gens4):
    forest, batch, weights, penalties = _small_problem(gens4)
    with pytest.raises(ForestError):
        loss(forest, gens4, batch, weights[:, :5], penalties)


@pytest.mark.parametrize(
    "trees,branching,expected",
    [(8, 8, 1176), (16, 16, 3120), (4, 16, 780), (8, 32, 2328), (1, 1, 105)],
)
def test_dof_tsc(trees, branching, expected):
    assert dof_tsc(trees, branching, 100) == expected


def test_dof_sc():
    assert dof_sc(64, 100) == 6336
    assert dof_sc(256, 100) == 25344
    assert dof_sc(1, 2) == 1


def test_dof_forest_counts_every_edge(rng):
    flat = Forest.initialize(ForestLayout(trees=8, branching=8), 10, rng)
    assert dof_forest(flat) == 1176
    deep = Forest.initialize(ForestLayout(trees=2, branching=2, depth=2), 10, rng)
    assert dof_forest(deep) == 2 * 99 + 12 * 6
    assert dof_forest(deep, group_dim=3) == 2 * 99 + 12 * 3
