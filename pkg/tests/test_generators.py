"""Tests for the affine generators and matrix exponential transforms."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tsc_forest.liegroup import (
    NUM_GENERATORS,
    LieGroupError,
    Quadrature,
    TransformOverflowError,
    apply_transform,
    build_generators,
    matexp_param_grad,
    matexp_param_grad_outer,
    transform_matrix,
)
from tsc_forest.liegroup.generators import spectral_derivative


def fft_derivative(image: np.ndarray, axis: int) -> np.ndarray:
    n = image.shape[axis]
    k = 2j * np.pi * np.fft.fftfreq(n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1, 1]
    shape[axis] = n
    return np.real(np.fft.ifft(k.reshape(shape) * np.fft.fft(image, axis=axis), axis=axis))


def test_side_one_generators_are_zero():
    gens = build_generators(1)
    assert gens.generators.shape == (NUM_GENERATORS, 1, 1)
    assert not np.any(gens.generators)


def test_invalid_side():
    with pytest.raises(LieGroupError):
        build_generators(0)


@pytest.mark.parametrize("side", [4, 5, 8])
def test_generators_annihilate_constants(side):
    gens = build_generators(side)
    ones = np.ones(side * side)
    for j in range(NUM_GENERATORS):
        assert np.max(np.abs(gens[j] @ ones)) < 1e-10


def test_generators_are_read_only(gens4):
    with pytest.raises(ValueError):
        gens4.generators[0, 0, 0] = 1.0


@pytest.mark.parametrize("n", [4, 7, 8])
def test_spectral_derivative_matches_fft(n):
    d = spectral_derivative(n)
    signal = np.random.default_rng(n).normal(size=n)
    expected = fft_derivative(signal[None, :], axis=1)[0]
    assert_allclose(d @ signal, expected, atol=1e-10)


def test_translation_generator_matches_fft_oracle(gens8):
    side = 8
    g1 = gens8[0]
    for column in range(side * side):
        image = np.zeros(side * side)
        image[column] = 1.0
        expected = -fft_derivative(image.reshape(side, side), axis=1).reshape(-1)
        assert np.max(np.abs(g1[:, column] - expected)) < 1e-8


def test_identity_at_zero(gens8):
    assert np.max(np.abs(transform_matrix(gens8, np.zeros(6)) - np.eye(64))) < 1e-12


def test_inverse_for_rigid_motions(gens8, rng):
    for _ in range(5):
        x = np.zeros(6)
        x[:3] = rng.uniform(-2.0, 2.0, size=3)
        product = transform_matrix(gens8, x) @ transform_matrix(gens8, -x)
        assert np.max(np.abs(product - np.eye(64))) < 1e-8


def test_inverse_for_general_affine(gens8, rng):
    for _ in range(5):
        x = rng.uniform(-0.5, 0.5, size=6)
        forward = transform_matrix(gens8, x)
        backward = transform_matrix(gens8, -x)
        scale = max(1.0, np.linalg.norm(forward, 2) * np.linalg.norm(backward, 2))
        assert np.max(np.abs(forward @ backward - np.eye(64))) < 1e-8 * scale


@pytest.mark.parametrize("shift", [-2, -1, 1, 2])
def test_integer_translation_is_circular_shift(gens8, band_limited, shift):
    image = band_limited(8, seed=shift + 10)
    moved_x = apply_transform(gens8, [shift, 0, 0, 0, 0, 0], image).reshape(8, 8)
    moved_y = apply_transform(gens8, [0, shift, 0, 0, 0, 0], image).reshape(8, 8)
    assert_allclose(moved_x, np.roll(image.reshape(8, 8), shift, axis=1), atol=1e-9)
    assert_allclose(moved_y, np.roll(image.reshape(8, 8), shift, axis=0), atol=1e-9)


def test_apply_transform_checks_size(gens4):
    with pytest.raises(LieGroupError):
        apply_transform(gens4, np.zeros(6), np.zeros(15))


def test_bad_parameter_vector(gens4):
    with pytest.raises(LieGroupError):
        transform_matrix(gens4, np.zeros(5))
    with pytest.raises(LieGroupError):
        transform_matrix(gens4, [np.nan, 0, 0, 0, 0, 0])


def test_overflow_is_reported(gens8):
    with pytest.raises(TransformOverflowError):
        transform_matrix(gens8, [0, 0, 0, 400.0, 0, 0])


def test_quadrature_validation():
    with pytest.raises(LieGroupError):
        Quadrature.stochastic(0)
    with pytest.raises(LieGroupError):
        Quadrature.stochastic(1).nodes(None)
    alphas, weights = Quadrature.fixed_nodes(5).nodes()
    assert np.all((alphas > 0) & (alphas < 1))
    assert weights.sum() == pytest.approx(1.0)


def test_gradient_at_zero_is_generator_projection(gens4, rng):
    cotangent = rng.normal(size=(16, 16))
    expected = np.einsum("jmn,mn->j", gens4.generators, cotangent)
    fixed = matexp_param_grad(gens4, np.zeros(6), cotangent, Quadrature.fixed_nodes(4))
    stochastic = matexp_param_grad(gens4, np.zeros(6), cotangent, Quadrature.stochastic(3), rng)
    assert_allclose(fixed, expected, atol=1e-10)
    assert_allclose(stochastic, expected, atol=1e-10)


def test_gradient_along_single_generator(gens8, rng):
    x = np.array([0.0, 0.0, 0.7, 0.0, 0.0, 0.0])
    cotangent = rng.normal(size=(64, 64))
    grad = matexp_param_grad(gens8, x, cotangent, Quadrature.fixed_nodes(8))
    expected = np.sum(cotangent * (gens8[2] @ transform_matrix(gens8, x)))
    assert abs(grad[2] - expected) < 1e-8 * max(1.0, abs(expected))


def finite_difference(func, x, h=1e-5):
    grad = np.zeros_like(x)
    for j in range(x.size):
        step = np.zeros_like(x)
        step[j] = h
        grad[j] = (func(x + step) - func(x - step)) / (2 * h)
    return grad


@pytest.mark.parametrize("bound,rtol", [(0.1, 1e-4), (0.5, 1e-3)])
def test_gradient_matches_finite_differences(gens8, bound, rtol):
    local = np.random.default_rng(int(bound * 100))
    for _ in range(20):
        x = local.uniform(-bound, bound, size=6)
        v = local.normal(size=64)
        u = local.normal(size=64)

        def objective(params):
            diff = transform_matrix(gens8, params) @ v - u
            return float(diff @ diff)

        cotangent = 2.0 * np.outer(transform_matrix(gens8, x) @ v - u, v)
        grad = matexp_param_grad(gens8, x, cotangent, Quadrature.fixed_nodes(16))
        fd = finite_difference(objective, x)
        assert_allclose(grad, fd, rtol=rtol, atol=rtol * np.abs(fd).max())


def test_outer_gradient_matches_dense(gens4, rng):
    x = rng.uniform(-0.3, 0.3, size=6)
    left, right = rng.normal(size=16), rng.normal(size=16)
    quadrature = Quadrature.fixed_nodes(6)
    dense = matexp_param_grad(gens4, x, np.outer(left, right), quadrature)
    outer = matexp_param_grad_outer(gens4, x, left, right, quadrature)
    assert_allclose(outer, dense, rtol=1e-10, atol=1e-12)


def _stochastic_check(gens, x, cotangent, draws, seed):
    reference = matexp_param_grad(gens, x, cotangent, Quadrature.fixed_nodes(32))
    local = np.random.default_rng(seed)
    samples = np.array(
        [matexp_param_grad(gens, x, cotangent, Quadrature.stochastic(1), local) for _ in range(draws)]
    )
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / np.sqrt(draws)
    assert np.all(np.abs(mean - reference) <= 3.0 * stderr + 1e-10)


def test_stochastic_gradient_is_unbiased(gens4):
    local = np.random.default_rng(11)
    x = local.uniform(-0.5, 0.5, size=6)
    _stochastic_check(gens4, x, local.normal(size=(16, 16)), 10_000, seed=12)


@pytest.mark.slow
def test_stochastic_gradient_is_unbiased_side8(gens8):
    local = np.random.default_rng(21)
    for instance in range(5):
        x = local.uniform(-0.5, 0.5, size=6)
        _stochastic_check(gens8, x, local.normal(size=(64, 64)), 10_000, seed=100 + instance)
