"""Grayscale image I/O and random patch sampling."""

import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from tsc_forest.dataio.batch import DataError, PatchBatch

logger = logging.getLogger(__name__)

PGM_SUFFIXES = (".pgm",)


class ImageFormatError(DataError):
    """Unsupported or malformed image file."""

    pass


def _read_header(data: bytes, path: Path) -> tuple[bytes, int, int, int, int]:
    """Parse a netpbm header; return (magic, width, height, maxval, payload offset)."""
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"{path}: truncated header")
        tokens.append(data[start:pos])
        if tokens[0] != b"P5":
            raise ImageFormatError(
                f"{path}: unsupported format {tokens[0][:2]!r}, only binary PGM (P5) is supported"
            )

    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ImageFormatError(f"{path}: malformed header {b' '.join(tokens)!r}")
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid size {width}x{height}")
    # Exactly one whitespace byte separates the header from the raster.
    return tokens[0], width, height, maxval, pos + 1


def load_grayscale(path: Path) -> np.ndarray:
    """Load an 8-bit binary PGM as an ``H x W`` array scaled to [0, 1].

    Raises:
        DataError: If the file does not exist
        ImageFormatError: On a non-P5 file, maxval other than 255 or a short payload
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"Image not found: {path}")

    data = path.read_bytes()
    _, width, height, maxval, offset = _read_header(data, path)
    if maxval != 255:
        raise ImageFormatError(f"{path}: maxval must be 255, got {maxval}")
    if len(data) - offset < width * height:
        raise ImageFormatError(
            f"{path}: truncated payload ({len(data) - offset} of {width * height} bytes)"
        )

    try:
        with Image.open(path) as img:
            pixels = np.asarray(img, dtype=np.float64)
    except (UnidentifiedImageError, OSError) as e:
        raise ImageFormatError(f"{path}: {e}")

    logger.debug(f"Loaded {path.name}: {width}x{height}")
    return pixels.reshape(height, width) / 255.0


def quantize(image: np.ndarray) -> np.ndarray:
    """Map [0, 1] intensities to 8-bit values."""
    return np.clip(np.rint(np.asarray(image, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def save_grayscale(image: np.ndarray, path: Path) -> Path:
    """Write a 2D array as a binary PGM.

    Float arrays are treated as [0, 1] intensities, ``uint8`` arrays are
    written as is.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ImageFormatError(f"Expected a 2D image, got shape {image.shape}")
    pixels = image if image.dtype == np.uint8 else quantize(image)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels).save(path, format="PPM")
    logger.debug(f"Saved {pixels.shape[1]}x{pixels.shape[0]} image to {path}")
    return path


def load_images(paths: Sequence[Path]) -> list[tuple[str, np.ndarray]]:
    """Load PGM files, expanding directories to the PGM files they contain.

    Returns:
        ``(name, image)`` pairs in sorted path order

    Raises:
        DataError: If a path is missing or nothing was found
    """
    files: list[Path] = []
    for path in map(Path, paths):
        if path.is_dir():
            files.extend(sorted(p for p in path.iterdir() if p.suffix.lower() in PGM_SUFFIXES))
        elif path.is_file():
            files.append(path)
        else:
            raise DataError(f"Data path not found: {path}")

    if not files:
        raise DataError("No PGM images found")

    logger.info(f"Loading {len(files)} images")
    return [(f.name, load_grayscale(f)) for f in files]


def sample_patches(
    images: Sequence[np.ndarray],
    side: int,
    count: int,
    rng: np.random.Generator,
    names: Optional[Sequence[str]] = None,
) -> PatchBatch:
    """Sample mean-subtracted patches at uniformly random positions.

    Every valid top-left corner across all images is equally likely, so
    larger images contribute proportionally more patches.

    Raises:
        DataError: If count is zero or an image is smaller than the patch
    """
    if count < 1:
        raise DataError("Patch count must be at least 1")
    if not images:
        raise DataError("No images to sample from")
    names = list(names) if names is not None else [f"image{i}" for i in range(len(images))]

    rows = np.empty(len(images), dtype=np.int64)
    cols = np.empty(len(images), dtype=np.int64)
    for i, image in enumerate(images):
        height, width = image.shape
        if height < side or width < side:
            raise DataError(f"{names[i]} is {height}x{width}, smaller than {side}x{side} patches")
        rows[i] = height - side + 1
        cols[i] = width - side + 1

    positions = (rows * cols).astype(np.float64)
    which = rng.choice(len(images), size=count, p=positions / positions.sum())
    tops = rng.integers(0, rows[which])
    lefts = rng.integers(0, cols[which])

    raw = np.empty((count, side * side))
    sources = []
    for n, (i, r, c) in enumerate(zip(which, tops, lefts)):
        raw[n] = images[i][r : r + side, c : c + side].reshape(-1)
        sources.append(f"{names[i]}@{r},{c}")

    logger.info(f"Sampled {count} {side}x{side} patches from {len(images)} images")
    return PatchBatch.from_raw(side, raw, sources)
