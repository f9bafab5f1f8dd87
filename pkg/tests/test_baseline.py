"""Tests for the fixed-magnitude sparse-coding baseline."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from tsc_forest.dataio import PatchBatch
from tsc_forest.forest import reconstruction_mse
from tsc_forest.training import TrainingError, infer_weights, train_sc_baseline, update_dictionary
from tsc_forest.training.baseline import project_columns


def _normalized(rng, pixels, features, magnitude):
    dictionary = rng.normal(size=(pixels, features))
    return dictionary * magnitude / np.linalg.norm(dictionary, axis=0)


def _projected_gradient(dictionary, batch, weights, magnitude, iterations=2000):
    used = np.any(weights != 0.0, axis=0)
    step = 0.5 * batch.size / np.linalg.norm(weights.T @ weights, 2)
    current = dictionary.copy()
    for _ in range(iterations):
        grad = -(2.0 / batch.size) * (batch.patches - weights @ current.T).T @ weights
        grad[:, ~used] = 0.0
        current = project_columns(current - step * grad, magnitude, used)
    return current


def test_update_does_not_increase_mse(rng, random_batch):
    batch = random_batch(4, 30)
    dictionary = _normalized(rng, 16, 6, 2.0)
    weights = infer_weights(dictionary, batch, 0.3)
    updated = update_dictionary(dictionary, batch, weights, 2.0)
    before = reconstruction_mse(dictionary, batch, weights)
    after = reconstruction_mse(updated, batch, weights)
    assert after <= before
    assert_allclose(np.linalg.norm(updated, axis=0), 2.0, rtol=1e-10)


def test_update_is_close_to_a_stationary_point(rng, random_batch):
    batch = random_batch(4, 40, seed=1)
    dictionary = _normalized(rng, 16, 5, 1.5)
    weights = infer_weights(dictionary, batch, 0.2)
    updated = update_dictionary(dictionary, batch, weights, 1.5)
    ours = reconstruction_mse(updated, batch, weights)
    polished = reconstruction_mse(
        _projected_gradient(updated, batch, weights, 1.5), batch, weights
    )
    assert polished >= 0.99 * ours


def test_unused_columns_are_unchanged(rng, random_batch):
    batch = random_batch(4, 20, seed=2)
    dictionary = _normalized(rng, 16, 4, 1.0)
    weights = infer_weights(dictionary, batch, 0.1)
    weights[:, 2] = 0.0
    updated = update_dictionary(dictionary, batch, weights, 1.0)
    assert_array_equal(updated[:, 2], dictionary[:, 2])


def test_all_zero_weights_return_a_copy(rng, random_batch):
    dictionary = _normalized(rng, 16, 3, 1.0)
    updated = update_dictionary(dictionary, random_batch(4, 5), np.zeros((5, 3)), 1.0)
    assert_array_equal(updated, dictionary)
    assert updated is not dictionary


def test_project_columns_skips_zero_columns():
    dictionary = np.array([[3.0, 0.0, 1.0], [4.0, 0.0, 0.0]])
    projected = project_columns(dictionary, 2.0, np.array([True, True, False]))
    assert_allclose(projected[:, 0], [1.2, 1.6])
    assert_array_equal(projected[:, 1], [0.0, 0.0])
    assert_array_equal(projected[:, 2], [1.0, 0.0])


def test_huge_penalty_leaves_dictionary_untouched(small_config, line_pool):
    initial, _ = train_sc_baseline(line_pool, 3, 1e6, 1.5, small_config.model_copy(update={"epochs": 0}))
    trained, metrics = train_sc_baseline(line_pool, 3, 1e6, 1.5, small_config)
    assert_array_equal(trained, initial)
    assert all(record.sparsity == 0.0 for record in metrics.epochs)


def test_feature_norms_stay_at_magnitude(small_config, line_pool):
    dictionary, metrics = train_sc_baseline(line_pool, 4, 0.1, 1.7, small_config)
    assert dictionary.shape == (16, 4)
    assert_allclose(np.linalg.norm(dictionary, axis=0), 1.7, rtol=1e-9)
    assert metrics.magnitude == 1.7
    assert len(metrics.epochs) == small_config.epochs


def test_sc_epochs_override(small_config, line_pool):
    config = small_config.model_copy(update={"sc_epochs": 1})
    _, metrics = train_sc_baseline(line_pool, 2, 0.1, 1.0, config)
    assert len(metrics.epochs) == 1


def test_single_feature_learns_repeated_patch(small_config, rng):
    patch = rng.normal(size=16)
    patch = 3.0 * (patch - patch.mean()) / np.linalg.norm(patch - patch.mean())
    pool = PatchBatch(side=4, patches=np.tile(patch, (50, 1)), sources=tuple(["p"] * 50))
    dictionary, _ = train_sc_baseline(
        pool, 1, 0.01, 1.0, small_config.model_copy(update={"epochs": 5})
    )
    feature = dictionary[:, 0]
    correlation = abs(feature @ patch) / (np.linalg.norm(feature) * np.linalg.norm(patch))
    assert correlation > 0.999


def test_baseline_is_deterministic(small_config, line_pool):
    first, _ = train_sc_baseline(line_pool, 4, 0.1, 1.0, small_config)
    second, _ = train_sc_baseline(line_pool, 4, 0.1, 1.0, small_config)
    assert_array_equal(first, second)


def test_invalid_magnitude(small_config, line_pool):
    with pytest.raises(TrainingError):
        train_sc_baseline(line_pool, 4, 0.1, 0.0, small_config)
