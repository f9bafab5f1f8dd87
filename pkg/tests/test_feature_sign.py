"""Tests for feature-sign search."""

import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tsc_forest.solver import (
    SolverConvergenceError,
    SolverError,
    feature_sign,
    lasso_objective,
)


def brute_force_objective(dictionary, signal, lambda_w):
    """Smallest objective over every sign pattern's restricted solution."""
    num_features = dictionary.shape[1]
    best = float(signal @ signal)
    for pattern in itertools.product((-1.0, 0.0, 1.0), repeat=num_features):
        theta = np.array(pattern)
        idx = np.flatnonzero(theta)
        if idx.size == 0:
            continue
        sub = dictionary[:, idx]
        rhs = sub.T @ signal - 0.5 * lambda_w * theta[idx]
        w = np.zeros(num_features)
        w[idx] = np.linalg.solve(sub.T @ sub, rhs)
        best = min(best, lasso_objective(dictionary, signal, w, lambda_w))
    return best


def kkt_violation(dictionary, signal, w, lambda_w):
    grad = 2.0 * dictionary.T @ (dictionary @ w - signal)
    nonzero = w != 0
    on_support = np.abs(grad[nonzero] + lambda_w * np.sign(w[nonzero]))
    off_support = np.maximum(np.abs(grad[~nonzero]) - lambda_w, 0.0)
    return max(on_support.max(initial=0.0), off_support.max(initial=0.0))


def test_large_penalty_gives_zero(rng):
    dictionary = rng.normal(size=(10, 5))
    signal = rng.normal(size=10)
    lambda_w = 2.0 * np.abs(dictionary.T @ signal).max() + 1e-6
    assert not np.any(feature_sign(dictionary, signal, lambda_w).w)


def test_zero_signal(rng):
    result = feature_sign(rng.normal(size=(10, 5)), np.zeros(10), 0.3)
    assert not np.any(result.w)
    assert result.support == ()


def test_orthonormal_dictionary_soft_thresholds(rng):
    q, _ = np.linalg.qr(rng.normal(size=(10, 4)))
    signal = rng.normal(size=10)
    lambda_w = 0.4
    c = q.T @ signal
    expected = np.sign(c) * np.maximum(np.abs(c) - lambda_w / 2.0, 0.0)
    assert_allclose(feature_sign(q, signal, lambda_w).w, expected, atol=1e-10)


@pytest.mark.parametrize("num_features", [1, 3, 5])
def test_matches_brute_force(num_features):
    local = np.random.default_rng(num_features)
    for _ in range(10):
        dictionary = local.normal(size=(10, num_features))
        signal = local.normal(size=10)
        lambda_w = local.uniform(0.05, 2.0)
        result = feature_sign(dictionary, signal, lambda_w)
        value = lasso_objective(dictionary, signal, result.w, lambda_w)
        oracle = brute_force_objective(dictionary, signal, lambda_w)
        assert value <= oracle + 1e-8 * max(1.0, oracle)
        assert kkt_violation(dictionary, signal, result.w, lambda_w) < 1e-8


@pytest.mark.slow
def test_matches_brute_force_many_instances():
    local = np.random.default_rng(2024)
    for _ in range(1000):
        num_features = int(local.integers(1, 9))
        dictionary = local.normal(size=(10, num_features))
        signal = local.normal(size=10)
        lambda_w = local.uniform(0.01, 3.0)
        result = feature_sign(dictionary, signal, lambda_w)
        value = lasso_objective(dictionary, signal, result.w, lambda_w)
        oracle = brute_force_objective(dictionary, signal, lambda_w)
        assert value <= oracle + 1e-8 * max(1.0, oracle)
        assert kkt_violation(dictionary, signal, result.w, lambda_w) < 1e-8


def test_kkt_on_overcomplete_dictionary(rng):
    dictionary = rng.normal(size=(16, 40))
    for _ in range(5):
        signal = rng.normal(size=16)
        result = feature_sign(dictionary, signal, 0.5)
        assert kkt_violation(dictionary, signal, result.w, 0.5) < 1e-8
        assert len(result.support) <= 16


def test_kkt_on_random_instances_with_more_features_than_pixels():
    local = np.random.default_rng(77)
    overcomplete = 0
    for _ in range(1000):
        pixels = int(local.integers(1, 21))
        num_features = int(local.integers(1, 17))
        overcomplete += num_features > pixels
        dictionary = local.normal(size=(pixels, num_features))
        signal = local.normal(size=pixels)
        lambda_w = local.uniform(0.01, 2.0)
        result = feature_sign(dictionary, signal, lambda_w)
        assert kkt_violation(dictionary, signal, result.w, lambda_w) < 1e-8
        assert len(result.support) <= np.linalg.matrix_rank(dictionary)
        assert lasso_objective(dictionary, signal, result.w, lambda_w) <= signal @ signal + 1e-12
    assert overcomplete > 100


def test_dependent_columns_small_penalty(rng):
    base = rng.normal(size=(6, 6))
    dictionary = np.hstack([base, base @ rng.normal(size=(6, 10))])
    for _ in range(20):
        signal = rng.normal(size=6)
        result = feature_sign(dictionary, signal, 0.01)
        assert kkt_violation(dictionary, signal, result.w, 0.01) < 1e-8
        assert len(result.support) <= 6


def test_column_permutation_permutes_solution(rng):
    dictionary = rng.normal(size=(12, 6))
    signal = rng.normal(size=12)
    perm = rng.permutation(6)
    w = feature_sign(dictionary, signal, 0.3).w
    permuted = feature_sign(dictionary[:, perm], signal, 0.3).w
    assert_allclose(permuted, w[perm], atol=1e-9)


def test_zero_penalty_is_least_squares(rng):
    dictionary = rng.normal(size=(10, 4))
    signal = rng.normal(size=10)
    expected, *_ = np.linalg.lstsq(dictionary, signal, rcond=None)
    assert_allclose(feature_sign(dictionary, signal, 0.0).w, expected, atol=1e-9)


def test_precomputed_gram_gives_same_answer(rng):
    dictionary = rng.normal(size=(10, 6))
    signal = rng.normal(size=10)
    plain = feature_sign(dictionary, signal, 0.2).w
    with_gram = feature_sign(dictionary, signal, 0.2, gram=dictionary.T @ dictionary).w
    assert_allclose(with_gram, plain, atol=1e-12)


def test_lasso_objective():
    dictionary = np.eye(3)
    signal = np.array([1.0, 2.0, 0.0])
    assert lasso_objective(dictionary, signal, np.zeros(3), 0.5) == pytest.approx(5.0)
    assert lasso_objective(dictionary, signal, signal, 0.0) == pytest.approx(0.0)
    assert lasso_objective(dictionary, signal, signal, 0.5) == pytest.approx(1.5)


def test_invalid_inputs(rng):
    with pytest.raises(SolverError):
        feature_sign(rng.normal(size=(10, 3)), np.zeros(9), 0.1)
    with pytest.raises(SolverError):
        feature_sign(rng.normal(size=(10, 3)), np.zeros(10), -0.1)
    with pytest.raises(SolverError):
        lasso_objective(np.eye(3), np.zeros(3), np.zeros(2), 0.1)


def test_iteration_cap(rng):
    dictionary = rng.normal(size=(10, 5))
    signal = rng.normal(size=10)
    with pytest.raises(SolverConvergenceError):
        feature_sign(dictionary, signal, 0.01, max_iter=1)
