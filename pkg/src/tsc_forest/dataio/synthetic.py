"""Synthetic data: the double-line patches and a 1/f image corpus."""

import logging
from pathlib import Path

import numpy as np

from tsc_forest.dataio.batch import DataError, PatchBatch, center_patches
from tsc_forest.dataio.images import save_grayscale

logger = logging.getLogger(__name__)

# blank, exactly one line, one vertical plus one horizontal line
LINE_CATEGORY_PROBS = (1.0 / 9.0, 2.0 / 3.0, 2.0 / 9.0)


def sample_line_patches(
    count: int, rng: np.random.Generator, side: int = 8
) -> tuple[np.ndarray, list[str]]:
    """Draw uncentred double-line patches and their tags.

    Tags are ``blank``, ``v<col>``, ``h<row>`` or ``v<col>+h<row>``. Lines have
    intensity 1 on a 0 background; crossings keep the maximum.

    Raises:
        DataError: If count is zero or the side is too small
    """
    if count < 1:
        raise DataError("Patch count must be at least 1")
    if side < 2:
        raise DataError("Line patches need a side of at least 2")

    category = rng.choice(3, size=count, p=LINE_CATEGORY_PROBS)
    vertical_first = rng.integers(0, 2, size=count) == 0
    columns = rng.integers(0, side, size=count)
    rows = rng.integers(0, side, size=count)

    raw = np.zeros((count, side, side))
    tags = []
    for n in range(count):
        if category[n] == 0:
            tags.append("blank")
        elif category[n] == 1 and vertical_first[n]:
            raw[n, :, columns[n]] = 1.0
            tags.append(f"v{columns[n]}")
        elif category[n] == 1:
            raw[n, rows[n], :] = 1.0
            tags.append(f"h{rows[n]}")
        else:
            raw[n, :, columns[n]] = 1.0
            raw[n, rows[n], :] = 1.0
            tags.append(f"v{columns[n]}+h{rows[n]}")

    return raw.reshape(count, side * side), tags


def gen_synthetic_lines(count: int, rng: np.random.Generator, side: int = 8) -> PatchBatch:
    """Mean-subtracted double-line patches (one line position per pixel row/column)."""
    raw, tags = sample_line_patches(count, rng, side)
    logger.info(f"Generated {count} synthetic line patches")
    return PatchBatch.from_raw(side, raw, tags)


def line_templates(side: int = 8) -> tuple[np.ndarray, list[str]]:
    """The ``2 * side`` mean-subtracted single-line patterns (vertical first)."""
    templates = np.zeros((2 * side, side, side))
    names = []
    for pos in range(side):
        templates[pos, :, pos] = 1.0
        names.append(f"v{pos}")
    for pos in range(side):
        templates[side + pos, pos, :] = 1.0
        names.append(f"h{pos}")
    return center_patches(templates.reshape(2 * side, side * side)), names


def template_match_scores(leaves: np.ndarray, templates: np.ndarray) -> np.ndarray:
    """Best normalised absolute correlation of each template with any leaf.

    Args:
        leaves: ``M x K`` dictionary
        templates: ``T x M`` patterns

    Returns:
        ``T`` scores in [0, 1]
    """
    leaf_norms = np.linalg.norm(leaves, axis=0)
    template_norms = np.linalg.norm(templates, axis=1)
    safe = np.outer(np.where(template_norms > 0, template_norms, np.inf),
                    np.where(leaf_norms > 0, leaf_norms, np.inf))
    return np.max(np.abs(templates @ leaves) / safe, axis=1, initial=0.0)


def synthesize_corpus(
    directory: Path,
    rng: np.random.Generator,
    count: int = 4,
    size: int = 256,
    exponent: float = 1.0,
) -> list[Path]:
    """Write grayscale images with a ``1/f**exponent`` amplitude spectrum.

    Natural images have roughly 1/f amplitude spectra, so these stand in for
    a natural-image corpus.
    """
    if count < 1 or size < 2:
        raise DataError("Corpus needs at least one image of at least 2x2 pixels")

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    radius = np.hypot(fx, fy)
    radius[0, 0] = 1.0 / size
    amplitude = radius**-exponent
    amplitude[0, 0] = 0.0

    paths = []
    for i in range(count):
        noise = rng.standard_normal((size, size))
        image = np.real(np.fft.ifft2(np.fft.fft2(noise) * amplitude))
        low, high = np.percentile(image, [1.0, 99.0])
        image = np.clip((image - low) / (high - low), 0.0, 1.0)
        paths.append(save_grayscale(image, directory / f"corpus_{i:02d}.pgm"))

    logger.info(f"Wrote {count} {size}x{size} corpus images to {directory}")
    return paths
