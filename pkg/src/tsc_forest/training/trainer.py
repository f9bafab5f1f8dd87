"""Alternating optimisation of a TSC forest."""

import logging
from typing import Callable, Optional

import numpy as np

from tsc_forest.config import TrainConfig
from tsc_forest.dataio.batch import DataError, PatchBatch
from tsc_forest.forest import (
    Forest,
    LeafOverflowError,
    leaf_transforms,
    loss,
    materialize_leaves,
)
from tsc_forest.liegroup import GeneratorSet, Quadrature, build_generators
from tsc_forest.models import EpochRecord, TrainMetrics
from tsc_forest.training.inference import (
    TrainingError,
    average_sparsity,
    infer_weights,
    usage_fractions,
)
from tsc_forest.training.reinit import reinit_underused
from tsc_forest.training.updates import step_transforms, update_roots

logger = logging.getLogger(__name__)

# Relative slack when checking inference against the zero-weight objective.
OBJECTIVE_SLACK = 1e-9


class NumericalAbortError(TrainingError):
    """The loss became non-finite or a leaf transform overflowed."""

    pass


class Trainer:
    """Fit a forest to patches by alternating inference, transform and root updates."""

    def __init__(
        self,
        config: TrainConfig,
        forest: Optional[Forest] = None,
        gens: Optional[GeneratorSet] = None,
    ):
        """Initialize trainer.

        Args:
            config: Training configuration
            forest: Starting forest (default: random initialisation from the seed)
            gens: Generators (default: built for ``config.side``)
        """
        self.config = config
        self.gens = gens or build_generators(config.side)
        self.penalties = config.penalties
        self.quadrature = Quadrature(config.quadrature, config.gradient_samples)

        # Independent streams for initialisation, batch sampling, gradients and re-init.
        init_seq, batch_seq, grad_seq, reinit_seq = np.random.SeedSequence(config.seed).spawn(4)
        self.batch_rng = np.random.default_rng(batch_seq)
        self.grad_rng = np.random.default_rng(grad_seq)
        self.reinit_rng = np.random.default_rng(reinit_seq)

        if forest is None:
            forest = Forest.initialize(
                config.layout, config.side, np.random.default_rng(init_seq), config.init_sigma
            )
        if forest.side != config.side:
            raise TrainingError(f"Forest is for side {forest.side}, config says {config.side}")
        self.forest = forest

        self.learning_rate = config.learning_rate
        self.epoch = 0
        self.metrics = TrainMetrics()

    def step(self, batch: PatchBatch) -> EpochRecord:
        """Run one epoch on ``batch``: infer, update transforms, update roots, maybe re-init.

        Raises:
            NumericalAbortError: If the loss is non-finite or a leaf overflows
            TrainingError: If inferred weights do worse than all-zero weights
        """
        config = self.config
        try:
            transforms = leaf_transforms(self.forest, self.gens)
        except LeafOverflowError as e:
            raise NumericalAbortError(f"Epoch {self.epoch}: {e}")
        leaves = materialize_leaves(self.forest, self.gens, transforms)

        weights = infer_weights(
            leaves, batch, self.penalties.lambda_w, config.solver_max_iter, config.workers
        )
        breakdown = loss(self.forest, self.gens, batch, weights, self.penalties, leaves=leaves)
        if not np.isfinite(breakdown.total):
            raise NumericalAbortError(
                f"Epoch {self.epoch}: non-finite loss (mse={breakdown.mse}, "
                f"weight_penalty={breakdown.weight_penalty})"
            )

        inferred = breakdown.mse + breakdown.weight_penalty
        baseline = float((batch.patches**2).sum()) / batch.size
        if inferred > baseline * (1.0 + OBJECTIVE_SLACK) + OBJECTIVE_SLACK:
            raise TrainingError(
                f"Epoch {self.epoch}: inferred objective {inferred:.6g} exceeds "
                f"zero-weight objective {baseline:.6g}"
            )

        usage = usage_fractions(weights)
        sparsity = average_sparsity(weights)

        step = step_transforms(
            self.forest,
            self.gens,
            batch,
            weights,
            self.penalties,
            self.learning_rate,
            self.quadrature,
            self.grad_rng,
            x_max=config.x_max,
            backtracking=config.backtracking,
            max_halvings=config.max_halvings,
            workers=config.workers,
            transforms=transforms,
        )
        try:
            forest = update_roots(step.forest, self.gens, batch, weights)
        except LeafOverflowError as e:
            raise NumericalAbortError(f"Epoch {self.epoch}: {e}")

        events = []
        if config.reinit_every and (self.epoch + 1) % config.reinit_every == 0:
            forest, events = reinit_underused(
                forest,
                usage,
                self.reinit_rng,
                threshold=config.underuse_threshold,
                sigma=config.reinit_sigma,
                epoch=self.epoch,
            )

        record = EpochRecord(
            epoch=self.epoch,
            loss=breakdown,
            sparsity=sparsity,
            reinits=len(events),
            learning_rate=step.learning_rate,
            skipped_edges=step.skipped_edges,
        )
        logger.info(
            f"Epoch {self.epoch}: mse={breakdown.mse:.5f} total={breakdown.total:.5f} "
            f"sparsity={sparsity:.2f} reinits={len(events)}"
        )

        self.forest = forest
        self.metrics.epochs.append(record)
        self.metrics.usage = [float(u) for u in usage]
        self.metrics.reinit_events.extend(events)
        self.learning_rate *= config.lr_decay
        self.epoch += 1
        return record

    def fit(
        self,
        pool: PatchBatch,
        on_epoch: Optional[Callable[[EpochRecord], None]] = None,
    ) -> tuple[Forest, TrainMetrics]:
        """Train for ``config.epochs`` epochs on batches drawn from ``pool``.

        Args:
            pool: Patch pool; each epoch samples ``batch_size`` patches without replacement
            on_epoch: Optional progress callback

        Returns:
            Final forest and metrics
        """
        if pool.side != self.config.side:
            raise DataError(f"Patches are {pool.side}x{pool.side}, config expects side {self.config.side}")
        if pool.size == 0:
            raise DataError("Patch pool is empty")

        for _ in range(self.config.epochs):
            batch = pool.sample(self.config.batch_size, self.batch_rng)
            record = self.step(batch)
            if on_epoch:
                on_epoch(record)

        return self.forest, self.metrics


def train(
    config: TrainConfig,
    pool: PatchBatch,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> tuple[Forest, TrainMetrics]:
    """Initialise a forest from ``config.seed`` and train it on ``pool``."""
    logger.info(
        f"Training {config.layout.label} forest (depth {config.depth}) on {pool.size} patches, "
        f"{config.epochs} epochs"
    )
    return Trainer(config).fit(pool, on_epoch)
