"""Generators of the 2D affine group acting on square pixel patches.

Each generator is the advective derivative ``-(u d/dx + v d/dy)`` of one
affine vector field, discretised with periodic sinc (spectral)
differentiation. Patches are flattened row-major, ``x`` runs along columns
and ``y`` along rows, both centred on the patch centre.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import circulant

from tsc_forest.presets import GENERATOR_NAMES

logger = logging.getLogger(__name__)

NUM_GENERATORS = len(GENERATOR_NAMES)


class LieGroupError(Exception):
    """Lie group construction or evaluation error."""

    pass


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """Six ``M x M`` generator matrices for a ``side x side`` patch.

    Immutable and safe to share between workers.
    """

    side: int
    generators: np.ndarray  # (6, M, M), read-only

    @property
    def pixels(self) -> int:
        return self.side * self.side

    def __len__(self) -> int:
        return NUM_GENERATORS

    def __getitem__(self, j: int) -> np.ndarray:
        """Generator ``j`` (0-based)."""
        return self.generators[j]

    def combine(self, x: np.ndarray) -> np.ndarray:
        """Lie algebra element ``sum_j x_j G_j``."""
        x = as_params(x)
        return np.tensordot(x, self.generators, axes=1)


def as_params(x) -> np.ndarray:
    """Validate a transformation parameter 6-vector.

    Raises:
        LieGroupError: If the vector has the wrong size or non-finite entries
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape != (NUM_GENERATORS,):
        raise LieGroupError(f"Expected {NUM_GENERATORS} transformation parameters, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise LieGroupError(f"Non-finite transformation parameters: {x}")
    return x


def clamp_params(x: np.ndarray, x_max: float) -> np.ndarray:
    """Clamp each coordinate to ``[-x_max, x_max]``."""
    return np.clip(x, -x_max, x_max)


def spectral_derivative(n: int) -> np.ndarray:
    """Periodic sinc differentiation matrix for ``n`` unit-spaced samples.

    For even ``n`` the Nyquist mode is dropped, which keeps the matrix real
    and makes integer shifts exact on band-limited signals.
    """
    if n < 1:
        raise LieGroupError("Grid size must be at least 1")
    if n == 1:
        return np.zeros((1, 1))

    h = 2.0 * np.pi / n
    k = np.arange(1, n)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    column = np.zeros(n)
    if n % 2 == 0:
        column[1:] = 0.5 * sign / np.tan(k * h / 2.0)
    else:
        column[1:] = 0.5 * sign / np.sin(k * h / 2.0)

    # Scale from a 2*pi period to a period of n pixels.
    return circulant(column * h)


def vector_fields(side: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """(u, v) components of the six affine vector fields at every pixel."""
    centre = (side - 1) / 2.0
    rows, cols = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    x = (cols - centre).reshape(-1).astype(np.float64)
    y = (rows - centre).reshape(-1).astype(np.float64)
    one = np.ones_like(x)
    zero = np.zeros_like(x)

    return [
        (one, zero),  # translation x
        (zero, one),  # translation y
        (-y, x),  # rotation
        (x, y),  # scaling
        (x, -y),  # parallel hyperbolic
        (y, x),  # diagonal hyperbolic
    ]


def build_generators(side: int) -> GeneratorSet:
    """Build the six affine generators for ``side x side`` patches.

    Args:
        side: Patch side length in pixels

    Returns:
        GeneratorSet in the fixed generator order

    Raises:
        LieGroupError: If side < 1
    """
    if side < 1:
        raise LieGroupError(f"Patch side must be at least 1, got {side}")

    d1 = spectral_derivative(side)
    eye = np.eye(side)
    d_x = np.kron(eye, d1)
    d_y = np.kron(d1, eye)

    generators = np.stack(
        [-(u[:, None] * d_x + v[:, None] * d_y) for u, v in vector_fields(side)]
    )
    generators.setflags(write=False)

    logger.debug(f"Built {NUM_GENERATORS} generators for {side}x{side} patches")
    return GeneratorSet(side=side, generators=generators)
