"""Patch data, images, synthetic corpora and model persistence."""

from tsc_forest.dataio.batch import (
    DataError,
    PatchBatch,
    center_patches,
    load_batch,
    save_batch,
)
from tsc_forest.dataio.images import (
    ImageFormatError,
    load_grayscale,
    load_images,
    quantize,
    sample_patches,
    save_grayscale,
)
from tsc_forest.dataio.persistence import (
    METRICS_COLUMNS,
    ModelFormatError,
    load_model,
    read_metrics,
    save_model,
    write_metrics,
)
from tsc_forest.dataio.synthetic import (
    gen_synthetic_lines,
    line_templates,
    sample_line_patches,
    synthesize_corpus,
    template_match_scores,
)

__all__ = [
    "METRICS_COLUMNS",
    "DataError",
    "ImageFormatError",
    "ModelFormatError",
    "PatchBatch",
    "center_patches",
    "gen_synthetic_lines",
    "line_templates",
    "load_batch",
    "load_grayscale",
    "load_images",
    "load_model",
    "quantize",
    "read_metrics",
    "sample_line_patches",
    "sample_patches",
    "save_batch",
    "save_grayscale",
    "save_model",
    "synthesize_corpus",
    "template_match_scores",
    "write_metrics",
]
