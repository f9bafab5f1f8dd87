"""Alternating optimisation of TSC forests and the sparse-coding baseline."""

from tsc_forest.training.baseline import train_sc_baseline, update_dictionary
from tsc_forest.training.inference import (
    InferenceError,
    TrainingError,
    average_sparsity,
    evaluate_dictionary,
    infer_weights,
    usage_fractions,
)
from tsc_forest.training.reinit import reinit_underused, sample_donor
from tsc_forest.training.trainer import NumericalAbortError, Trainer, train
from tsc_forest.training.updates import (
    solve_root,
    step_transforms,
    transform_gradients,
    update_roots,
    update_transforms,
)

__all__ = [
    "InferenceError",
    "NumericalAbortError",
    "Trainer",
    "TrainingError",
    "average_sparsity",
    "evaluate_dictionary",
    "infer_weights",
    "reinit_underused",
    "sample_donor",
    "solve_root",
    "step_transforms",
    "train",
    "train_sc_baseline",
    "transform_gradients",
    "update_dictionary",
    "update_roots",
    "update_transforms",
]
