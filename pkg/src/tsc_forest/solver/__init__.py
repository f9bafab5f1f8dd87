"""Sparse weight inference."""

from tsc_forest.solver.feature_sign import (
    EFFECTIVE_ZERO,
    SolverConvergenceError,
    SolverError,
    SparseWeights,
    feature_sign,
    lasso_objective,
)

__all__ = [
    "EFFECTIVE_ZERO",
    "SolverConvergenceError",
    "SolverError",
    "SparseWeights",
    "feature_sign",
    "lasso_objective",
]
