"""Record types shared across tsc-forest."""

import re
from typing import Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from tsc_forest.presets import DEFAULT_PENALTY_MULTIPLIERS

_LAYOUT_PATTERN = re.compile(r"^\s*(\d+)\s*[xX×]\s*(\d+)\s*$")


class ForestLayout(BaseModel):
    """Number of trees, children per node and tree depth."""

    model_config = {"frozen": True}

    trees: int = Field(ge=1)
    branching: int = Field(ge=1)
    depth: int = Field(default=1, ge=1)

    @classmethod
    def parse(cls, text: str, depth: int = 1) -> "ForestLayout":
        """Parse a layout written as ``VxB`` (e.g. ``8x8``)."""
        match = _LAYOUT_PATTERN.match(text)
        if not match:
            raise ValueError(f"Invalid layout '{text}', expected e.g. 8x8")
        return cls(trees=int(match.group(1)), branching=int(match.group(2)), depth=depth)

    @property
    def leaves_per_tree(self) -> int:
        return self.branching**self.depth

    @property
    def leaf_count(self) -> int:
        return self.trees * self.leaves_per_tree

    @property
    def label(self) -> str:
        return f"{self.trees}x{self.branching}"


class Penalties(BaseModel):
    """Sparsity penalty and per-generator parameter penalties."""

    model_config = {"frozen": True}

    lambda_w: float = Field(ge=0.0)
    lambda_params: tuple[float, float, float, float, float, float]

    @field_validator("lambda_params")
    @classmethod
    def _nonnegative(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if any(v < 0 for v in value):
            raise ValueError("parameter penalties must be nonnegative")
        return value

    @classmethod
    def from_base(
        cls,
        lambda_w: float,
        lambda_base: float,
        multipliers: tuple[float, ...] = DEFAULT_PENALTY_MULTIPLIERS,
    ) -> "Penalties":
        return cls(lambda_w=lambda_w, lambda_params=tuple(lambda_base * m for m in multipliers))

    @classmethod
    def zero(cls) -> "Penalties":
        return cls(lambda_w=0.0, lambda_params=(0.0,) * 6)


class LossBreakdown(BaseModel):
    """Terms of the full forest loss."""

    mse: float = Field(ge=0.0)
    weight_penalty: float = Field(ge=0.0)
    param_penalties: list[float] = Field(min_length=6, max_length=6)
    total: float

    @classmethod
    def from_terms(
        cls, mse: float, weight_penalty: float, param_penalties: list[float]
    ) -> "LossBreakdown":
        total = mse + weight_penalty + sum(param_penalties)
        return cls(
            mse=mse,
            weight_penalty=weight_penalty,
            param_penalties=list(param_penalties),
            total=total,
        )


class ReinitEvent(BaseModel):
    """A leaf whose transformation was re-initialised."""

    epoch: int
    tree: int
    leaf: int
    donor: Optional[int] = None  # None: reset around the identity
    usage: float


class EpochRecord(BaseModel):
    """Metrics of one alternating-optimisation epoch."""

    epoch: int
    loss: LossBreakdown
    sparsity: float = Field(ge=0.0)
    reinits: int = 0
    learning_rate: float
    skipped_edges: int = 0


class TrainMetrics(BaseModel):
    """Per-epoch records plus the latest leaf usage."""

    epochs: list[EpochRecord] = Field(default_factory=list)
    usage: list[float] = Field(default_factory=list)
    reinit_events: list[ReinitEvent] = Field(default_factory=list)

    @model_validator(mode="after")
    def _usage_in_range(self) -> "TrainMetrics":
        if any(u < 0.0 or u > 1.0 for u in self.usage):
            raise ValueError("usage fractions must lie in [0, 1]")
        return self

    @property
    def final_mse(self) -> Optional[float]:
        return self.epochs[-1].loss.mse if self.epochs else None


class ScEpochRecord(BaseModel):
    """Metrics of one sparse-coding baseline epoch."""

    epoch: int
    mse: float
    sparsity: float


class ScMetrics(BaseModel):
    """Sparse-coding baseline metrics."""

    magnitude: float
    epochs: list[ScEpochRecord] = Field(default_factory=list)

    @property
    def final_mse(self) -> Optional[float]:
        return self.epochs[-1].mse if self.epochs else None


class ComparisonRow(BaseModel):
    """One TSC vs SC comparison row; fields follow the published column order."""

    lambda_w: float
    layout: str
    tsc_mse: float
    tsc_sparsity: float
    df_tsc: int
    sc_mse: float
    sc_sparsity: float
    df_sc: int
    num_features: int
    df_ratio: float
    tsc_train_mse: float
    sc_train_mse: float
    note: str = ""

    @model_validator(mode="after")
    def _ratio_matches(self) -> "ComparisonRow":
        if abs(self.df_ratio - self.df_sc / self.df_tsc) > 1e-9:
            raise ValueError("df_ratio must equal df_sc / df_tsc")
        return self


class DofReport(BaseModel):
    """Degrees of freedom of a TSC forest and its SC counterpart."""

    layout: str
    pixels: int
    group_dim: int
    df_tsc: int
    df_sc: int
    num_features: int
    ratio: float
    note: Optional[str] = None


class TrainSummary(BaseModel):
    """Summary written next to a training checkpoint."""

    layout: str
    side: int
    epochs: int
    seed: int
    final_mse: Optional[float]
    final_sparsity: Optional[float]
    reinit_events: int
    model_path: str
    metrics_path: str
