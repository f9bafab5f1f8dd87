"""Feature-sign search for L1-regularised least squares.

Solves ``min_w ||y - F w||^2 + lambda ||w||_1`` exactly with an active-set
method: guess the signs of the nonzero coefficients, solve the resulting
unconstrained quadratic on the active set, then line-search back to the
best zero crossing whenever a coefficient changes sign.

When the active columns become linearly dependent (always possible once more
features than pixels are active), the objective is linear along the null
direction, so the solver walks along it to the first zero crossing and drops
that coefficient. The active columns are therefore independent whenever the
quadratic is solved.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh, lstsq

logger = logging.getLogger(__name__)

EFFECTIVE_ZERO = 1e-12
# Active-set Gram eigenvalues below this fraction of the largest count as zero.
RANK_RTOL = 1e-10


class SolverError(ValueError):
    """Sparse solver error."""

    pass


class SolverConvergenceError(SolverError):
    """Active-set iterations exceeded the configured cap."""

    pass


@dataclass(frozen=True, eq=False)
class SparseWeights:
    """Solution of one sparse inference problem."""

    w: np.ndarray
    iterations: int = 0

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(k) for k in np.flatnonzero(self.w))


def _check_problem(dictionary, signal) -> tuple[np.ndarray, np.ndarray]:
    dictionary = np.asarray(dictionary, dtype=np.float64)
    signal = np.asarray(signal, dtype=np.float64).reshape(-1)
    if dictionary.ndim != 2:
        raise SolverError(f"Dictionary must be a matrix, got shape {dictionary.shape}")
    if dictionary.shape[0] != signal.size:
        raise SolverError(
            f"Dictionary has {dictionary.shape[0]} rows but signal has {signal.size} entries"
        )
    if not np.all(np.isfinite(dictionary)):
        raise SolverError("Dictionary contains non-finite entries")
    return dictionary, signal


def lasso_objective(dictionary, signal, w, lambda_w: float) -> float:
    """``||signal - dictionary w||^2 + lambda_w ||w||_1``."""
    dictionary, signal = _check_problem(dictionary, signal)
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.size != dictionary.shape[1]:
        raise SolverError(f"Weights have {w.size} entries, dictionary has {dictionary.shape[1]} columns")
    residual = signal - dictionary @ w
    return float(residual @ residual + lambda_w * np.abs(w).sum())


def feature_sign(
    dictionary,
    signal,
    lambda_w: float,
    max_iter: Optional[int] = None,
    gram: Optional[np.ndarray] = None,
) -> SparseWeights:
    """Exact L1-regularised least squares by feature-sign search.

    Args:
        dictionary: ``M x K`` matrix, columns need not be unit norm
        signal: ``M``-vector
        lambda_w: Nonnegative sparsity penalty
        max_iter: Active-set iteration cap (default ``10 * K``)
        gram: Optional precomputed ``dictionary^T dictionary``

    Returns:
        SparseWeights with entries below 1e-12 stored as exact zeros

    Raises:
        SolverError: On invalid inputs
        SolverConvergenceError: If the iteration cap is exceeded
    """
    dictionary, signal = _check_problem(dictionary, signal)
    if lambda_w < 0 or not np.isfinite(lambda_w):
        raise SolverError(f"lambda_w must be a nonnegative number, got {lambda_w}")

    num_features = dictionary.shape[1]
    if num_features == 0:
        return SparseWeights(w=np.zeros(0))

    if gram is None:
        gram = dictionary.T @ dictionary
    corr = dictionary.T @ signal
    energy = float(signal @ signal)
    cap = max_iter if max_iter is not None else max(10 * num_features, 10)
    tol = 1e-10 * max(1.0, lambda_w, float(np.abs(corr).max(initial=0.0)))

    def objective(w: np.ndarray) -> float:
        return energy - 2.0 * (w @ corr) + w @ gram @ w + lambda_w * np.abs(w).sum()

    w = np.zeros(num_features)
    theta = np.zeros(num_features)
    active = np.zeros(num_features, dtype=bool)
    grad = -2.0 * corr

    for iteration in range(1, cap + 1):
        nz_violation = np.max(np.abs(grad[active] + lambda_w * theta[active]), initial=0.0)

        if nz_violation <= tol:
            # Nonzero coefficients are optimal; activate the worst zero coefficient.
            scores = np.where(active, -np.inf, np.abs(grad))
            candidate = int(np.argmax(scores))
            if active[candidate] or scores[candidate] <= lambda_w + tol:
                return SparseWeights(w=_snap(w), iterations=iteration - 1)
            active[candidate] = True
            theta[candidate] = -np.sign(grad[candidate])
            logger.debug(f"Activated feature {candidate} with sign {theta[candidate]:+.0f}")

        idx = np.flatnonzero(active)
        direction = _null_direction(gram[np.ix_(idx, idx)])
        if direction is not None:
            stepped = _null_step(w[idx], theta[idx], grad[idx], lambda_w, direction)
            if stepped is not None and (
                objective(_expand(num_features, idx, stepped)) <= objective(w) + tol
            ):
                logger.debug(f"Dependent active set of size {idx.size}; dropped one feature")
                w[idx] = stepped
                w[idx[np.abs(stepped) < EFFECTIVE_ZERO]] = 0.0
                active = w != 0.0
                theta = np.sign(w)
                grad = 2.0 * (gram @ w - corr)
                continue

        rhs = corr[idx] - 0.5 * lambda_w * theta[idx]
        w_new, *_ = lstsq(gram[np.ix_(idx, idx)], rhs, cond=None)

        w_old = w[idx]
        best = w_new
        best_obj = objective(_expand(num_features, idx, w_new))
        zeroed = np.flatnonzero(np.sign(w_new) != theta[idx])

        for k in zeroed:
            denom = w_old[k] - w_new[k]
            if denom == 0.0:
                continue
            t = w_old[k] / denom
            if not 0.0 < t < 1.0:
                continue
            point = w_old + t * (w_new - w_old)
            point[k] = 0.0
            value = objective(_expand(num_features, idx, point))
            if value < best_obj:
                best, best_obj = point, value

        w[idx] = best
        w[idx[np.abs(best) < EFFECTIVE_ZERO]] = 0.0
        active = w != 0.0
        theta = np.sign(w)
        grad = 2.0 * (gram @ w - corr)

    raise SolverConvergenceError(
        f"Feature-sign search did not converge in {cap} iterations (K={num_features})"
    )


def _null_direction(sub_gram: np.ndarray) -> Optional[np.ndarray]:
    """Unit vector ``d`` with ``sub_gram d = 0``, or None if the columns are independent."""
    values, vectors = eigh(sub_gram)
    if values[0] > RANK_RTOL * max(values[-1], EFFECTIVE_ZERO):
        return None
    return vectors[:, 0]


def _null_step(
    w: np.ndarray, theta: np.ndarray, grad: np.ndarray, lambda_w: float, direction: np.ndarray
) -> Optional[np.ndarray]:
    """Move along a null direction of the active columns to the first zero crossing.

    The residual is constant along ``direction``, so within one sign pattern
    the objective changes linearly. A just-activated (still zero) coefficient
    fixes the orientation so that it moves into its chosen sign; otherwise the
    orientation with nonincreasing slope is taken.
    """
    fresh = np.flatnonzero((w == 0.0) & (np.abs(direction) > EFFECTIVE_ZERO))
    if fresh.size:
        if theta[fresh[0]] * direction[fresh[0]] < 0.0:
            direction = -direction
    elif (grad + lambda_w * theta) @ direction > 0.0:
        direction = -direction

    crossing = np.flatnonzero((w != 0.0) & (theta * direction < 0.0))
    if crossing.size == 0:
        return None
    steps = np.abs(w[crossing] / direction[crossing])
    first = int(np.argmin(steps))
    stepped = w + steps[first] * direction
    stepped[crossing[first]] = 0.0
    return stepped


def _expand(size: int, idx: np.ndarray, values: np.ndarray) -> np.ndarray:
    full = np.zeros(size)
    full[idx] = values
    return full


def _snap(w: np.ndarray) -> np.ndarray:
    w = w.copy()
    w[np.abs(w) < EFFECTIVE_ZERO] = 0.0
    return w
