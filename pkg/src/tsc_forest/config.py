"""Configuration management using Pydantic Settings.

Values come from field defaults, ``TSC_*`` environment variables, a config
file and finally command-line overrides, in increasing priority. Config files
are flat ``key = value`` text, or a flat YAML mapping when the file ends in
``.yaml``/``.yml``.
"""

from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from tsc_forest.models import ForestLayout, Penalties
from tsc_forest.presets import DEFAULT_PENALTY_MULTIPLIERS, GROUP_DIMS


class ConfigError(Exception):
    """Configuration error."""

    pass


class TrainConfig(BaseSettings):
    """Forest layout, penalties and optimiser settings."""

    # .env may carry keys of either settings class; load_config rejects unknown keys.
    model_config = SettingsConfigDict(
        env_prefix="TSC_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    trees: int = Field(default=8, ge=1)
    branching: int = Field(default=8, ge=1)
    depth: int = Field(default=1, ge=1)
    side: int = Field(default=8, ge=1)

    lambda_w: float = Field(default=0.4, ge=0.0)
    lambda_base: float = Field(default=1e-3, ge=0.0)
    penalty_multipliers: tuple[float, float, float, float, float, float] = (
        DEFAULT_PENALTY_MULTIPLIERS
    )
    lambda_f: float = Field(default=0.0, ge=0.0)  # SC baseline only

    learning_rate: float = Field(default=0.1, ge=0.0)
    lr_decay: float = Field(default=0.99, gt=0.0, le=1.0)
    backtracking: bool = True
    max_halvings: int = Field(default=10, ge=0)
    batch_size: int = Field(default=2000, ge=1)
    epochs: int = Field(default=100, ge=0)
    gradient_samples: int = Field(default=1, ge=1)
    quadrature: Literal["stochastic", "fixed_nodes"] = "stochastic"
    x_max: float = Field(default=5.0, gt=0.0)

    underuse_threshold: float = Field(default=0.005, ge=0.0, le=1.0)
    reinit_sigma: float = Field(default=0.1, ge=0.0)
    reinit_every: int = Field(default=5, ge=0)  # 0 disables re-initialisation
    init_sigma: float = Field(default=0.05, ge=0.0)

    seed: int = 0
    workers: int = Field(default=1, ge=1)
    solver_max_iter: Optional[int] = Field(default=None, ge=1)
    sc_epochs: Optional[int] = Field(default=None, ge=0)

    @field_validator("penalty_multipliers", mode="before")
    @classmethod
    def _split_multipliers(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(float(part) for part in value.replace(",", " ").split())
        return value

    @field_validator("penalty_multipliers")
    @classmethod
    def _nonnegative_multipliers(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if any(v < 0 for v in value):
            raise ValueError("penalty multipliers must be nonnegative")
        return value

    @property
    def layout(self) -> ForestLayout:
        return ForestLayout(trees=self.trees, branching=self.branching, depth=self.depth)

    @property
    def pixels(self) -> int:
        return self.side * self.side

    @property
    def penalties(self) -> Penalties:
        return Penalties.from_base(self.lambda_w, self.lambda_base, self.penalty_multipliers)


class BenchConfig(BaseSettings):
    """Benchmark harness settings."""

    model_config = SettingsConfigDict(
        env_prefix="TSC_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    patch_count: int = Field(default=20000, ge=1)
    holdout_fraction: float = Field(default=0.1, gt=0.0, lt=1.0)
    sweep_points: int = Field(default=17, ge=2)
    sweep_batch: int = Field(default=2000, ge=1)
    group_dim: int = 6
    pixels: int = Field(default=100, ge=2)

    @field_validator("group_dim")
    @classmethod
    def _known_group(cls, value: int) -> int:
        if value not in GROUP_DIMS.values():
            raise ValueError(f"group_dim must be one of {sorted(GROUP_DIMS.values())}")
        return value


class Config(BaseSettings):
    """Main configuration container."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    train: TrainConfig = Field(default_factory=TrainConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)


def parse_config_file(path: Path) -> dict[str, Any]:
    """Read a flat key/value config file.

    Raises:
        ConfigError: If the file is missing or a line cannot be parsed
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")

    text = path.read_text(encoding="utf-8")

    if path.suffix.lower() in (".yaml", ".yml"):
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid YAML in {path}: {e}")
        if not isinstance(data, dict) or any(isinstance(v, dict) for v in data.values()):
            raise ConfigError(f"{path} must be a flat mapping of keys to values")
        return {str(k): v for k, v in data.items()}

    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got '{raw.strip()}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: missing key")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
        values[key] = None if value.lower() in ("none", "null", "") else value
    return values


def load_config(path: Optional[Path] = None, **overrides: Any) -> Config:
    """Load configuration from environment, an optional file and overrides.

    Args:
        path: Optional flat config file
        **overrides: Highest-priority values (e.g. from CLI flags); ``None`` is ignored

    Returns:
        Validated configuration

    Raises:
        ConfigError: On unknown keys or invalid values
    """
    values = parse_config_file(path) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})

    train_keys = set(TrainConfig.model_fields)
    bench_keys = set(BenchConfig.model_fields)
    train_values: dict[str, Any] = {}
    bench_values: dict[str, Any] = {}

    for key, value in values.items():
        if key in train_keys:
            train_values[key] = value
        elif key in bench_keys:
            bench_values[key] = value
        else:
            raise ConfigError(f"Unknown config key '{key}'")

    try:
        return Config(train=TrainConfig(**train_values), bench=BenchConfig(**bench_values))
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}")
