"""Matrix exponential transformations and their parameter gradients."""

import logging
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy.linalg import expm

from tsc_forest.liegroup.generators import GeneratorSet, LieGroupError, as_params

logger = logging.getLogger(__name__)

OVERFLOW_LIMIT = 1e12


class TransformOverflowError(LieGroupError):
    """The matrix exponential blew up, usually from runaway parameters."""

    pass


@dataclass(frozen=True)
class Quadrature:
    """Rule for the expectation over ``alpha ~ U(0, 1)`` in the exp gradient.

    ``stochastic`` draws ``samples`` uniform nodes per call (training);
    ``fixed_nodes`` uses Gauss-Legendre nodes on [0, 1] (deterministic).
    """

    kind: Literal["stochastic", "fixed_nodes"]
    samples: int

    def __post_init__(self):
        if self.samples < 1:
            raise LieGroupError("Quadrature needs at least one sample")
        if self.kind not in ("stochastic", "fixed_nodes"):
            raise LieGroupError(f"Unknown quadrature kind '{self.kind}'")

    @classmethod
    def stochastic(cls, samples: int = 1) -> "Quadrature":
        return cls("stochastic", samples)

    @classmethod
    def fixed_nodes(cls, samples: int = 16) -> "Quadrature":
        return cls("fixed_nodes", samples)

    def nodes(self, rng: Optional[np.random.Generator] = None) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(alphas, weights)`` with weights summing to one."""
        if self.kind == "stochastic":
            if rng is None:
                raise LieGroupError("Stochastic quadrature requires a random generator")
            alphas = rng.uniform(0.0, 1.0, size=self.samples)
            return alphas, np.full(self.samples, 1.0 / self.samples)

        t, w = np.polynomial.legendre.leggauss(self.samples)
        return (t + 1.0) / 2.0, w / 2.0


def _expm_checked(a: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        result = expm(a)
    if not np.all(np.isfinite(result)) or np.max(np.abs(result)) > OVERFLOW_LIMIT:
        raise TransformOverflowError(
            f"Matrix exponential overflow (|A|_1 = {np.abs(a).sum(axis=0).max():.3g})"
        )
    return result


def transform_matrix(gens: GeneratorSet, x) -> np.ndarray:
    """``T(x) = exp(sum_j x_j G_j)`` by scaling and squaring with a Pade core.

    Raises:
        TransformOverflowError: If any entry exceeds the overflow limit
    """
    return _expm_checked(gens.combine(x))


def apply_transform(gens: GeneratorSet, x, image: np.ndarray) -> np.ndarray:
    """Apply ``T(x)`` to a flattened patch."""
    image = np.asarray(image, dtype=np.float64).reshape(-1)
    if image.size != gens.pixels:
        raise LieGroupError(f"Image has {image.size} pixels, generators expect {gens.pixels}")
    return transform_matrix(gens, x) @ image


def _exp_pairs(a: np.ndarray, alphas: np.ndarray):
    for alpha in alphas:
        yield _expm_checked(alpha * a), _expm_checked((1.0 - alpha) * a)


def matexp_param_grad(
    gens: GeneratorSet,
    x,
    cotangent: np.ndarray,
    quadrature: Quadrature,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Gradient of ``<cotangent, T(x)>`` with respect to ``x``.

    Uses ``dT/dx_j = E_alpha[exp(alpha A) G_j exp((1 - alpha) A)]`` with the
    expectation evaluated by ``quadrature``.

    Args:
        gens: Generator set
        x: Transformation parameters
        cotangent: ``dL/dT``, an ``M x M`` matrix
        quadrature: Stochastic or fixed-node rule
        rng: Random generator (stochastic mode only)

    Returns:
        Gradient 6-vector
    """
    x = as_params(x)
    cotangent = np.asarray(cotangent, dtype=np.float64)
    if cotangent.shape != (gens.pixels, gens.pixels):
        raise LieGroupError(f"Cotangent must be {gens.pixels}x{gens.pixels}")

    a = gens.combine(x)
    alphas, weights = quadrature.nodes(rng)
    grad = np.zeros(len(gens))
    for weight, (left, right) in zip(weights, _exp_pairs(a, alphas)):
        # <C, L G R> = <L^T C R^T, G>
        projected = left.T @ cotangent @ right.T
        grad += weight * np.einsum("jmn,mn->j", gens.generators, projected)
    return grad


def matexp_param_grad_outer(
    gens: GeneratorSet,
    x,
    left_vec: np.ndarray,
    right_vec: np.ndarray,
    quadrature: Quadrature,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Same as :func:`matexp_param_grad` for a rank-one cotangent ``left right^T``."""
    x = as_params(x)
    a = gens.combine(x)
    alphas, weights = quadrature.nodes(rng)
    grad = np.zeros(len(gens))
    for weight, (left, right) in zip(weights, _exp_pairs(a, alphas)):
        grad += weight * np.einsum(
            "m,jmn,n->j", left.T @ left_vec, gens.generators, right @ right_vec
        )
    return grad
