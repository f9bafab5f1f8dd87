"""Affine Lie group generators and matrix exponential transforms."""

from tsc_forest.liegroup.generators import (
    NUM_GENERATORS,
    GeneratorSet,
    LieGroupError,
    as_params,
    build_generators,
    clamp_params,
)
from tsc_forest.liegroup.transforms import (
    Quadrature,
    TransformOverflowError,
    apply_transform,
    matexp_param_grad,
    matexp_param_grad_outer,
    transform_matrix,
)

__all__ = [
    "NUM_GENERATORS",
    "GeneratorSet",
    "LieGroupError",
    "Quadrature",
    "TransformOverflowError",
    "apply_transform",
    "as_params",
    "build_generators",
    "clamp_params",
    "matexp_param_grad",
    "matexp_param_grad_outer",
    "transform_matrix",
]
