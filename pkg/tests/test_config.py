"""Tests for configuration loading."""

from pathlib import Path

import pytest

from tsc_forest.config import ConfigError, TrainConfig, load_config, parse_config_file
from tsc_forest.models import ForestLayout, Penalties

CONFIG_DIR = Path(__file__).resolve().parents[1] / "config"


def test_defaults():
    config = load_config()
    assert config.train.layout == ForestLayout(trees=8, branching=8)
    assert config.train.lambda_w == 0.4
    assert config.train.quadrature == "stochastic"
    assert config.bench.group_dim == 6
    assert config.bench.pixels == 100


def test_shipped_yaml_matches_defaults():
    config = load_config(CONFIG_DIR / "default.yaml")
    assert config.train == TrainConfig()
    assert config.bench.patch_count == 20000


def test_shipped_desk_config():
    config = load_config(CONFIG_DIR / "desk.conf")
    assert config.train.layout.label == "4x8"
    assert config.bench.patch_count == 50000


def test_key_value_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text(
        "# comment line\n"
        "trees = 4   # inline comment\n"
        "branching=16\n"
        "\n"
        "backtracking = false\n"
        "solver_max_iter = none\n"
        "holdout_fraction = 0.25\n"
    )
    config = load_config(path)
    assert config.train.layout == ForestLayout(trees=4, branching=16)
    assert config.train.backtracking is False
    assert config.train.solver_max_iter is None
    assert config.bench.holdout_fraction == 0.25


def test_overrides_beat_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("lambda_w = 0.2\nepochs = 7\n")
    config = load_config(path, lambda_w=0.9, epochs=None)
    assert config.train.lambda_w == 0.9
    assert config.train.epochs == 7


def test_environment_variables(monkeypatch):
    monkeypatch.setenv("TSC_LAMBDA_W", "0.7")
    monkeypatch.setenv("TSC_SWEEP_POINTS", "9")
    config = load_config()
    assert config.train.lambda_w == 0.7
    assert config.bench.sweep_points == 9
    assert load_config(lambda_w=0.1).train.lambda_w == 0.1


def test_dotenv_file(tmp_path, monkeypatch):
    monkeypatch.delenv("TSC_LAMBDA_W", raising=False)
    monkeypatch.delenv("TSC_PATCH_COUNT", raising=False)
    (tmp_path / ".env").write_text("TSC_LAMBDA_W=0.65\nTSC_PATCH_COUNT=123\n")
    monkeypatch.chdir(tmp_path)
    config = load_config()
    assert config.train.lambda_w == 0.65
    assert config.bench.patch_count == 123

    monkeypatch.setenv("TSC_LAMBDA_W", "0.3")
    assert load_config().train.lambda_w == 0.3
    assert load_config(lambda_w=0.2).train.lambda_w == 0.2


def test_penalty_multipliers():
    config = load_config(lambda_base=0.01, penalty_multipliers="1 2 3 4 5 6")
    assert config.train.penalty_multipliers == (1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
    assert config.train.penalties.lambda_params == pytest.approx((0.01, 0.02, 0.03, 0.04, 0.05, 0.06))
    assert config.train.penalties.lambda_w == 0.4


def test_default_penalties_weigh_scaling_more():
    penalties = Penalties.from_base(0.4, 1e-3)
    assert penalties.lambda_params == pytest.approx((1e-3, 1e-3, 1e-3, 1e-2, 1e-2, 1e-3))


@pytest.mark.parametrize(
    "text",
    [
        "bogus = 1\n",
        "trees = abc\n",
        "lambda_w = -1\n",
        "penalty_multipliers = 1 1 1 -1 1 1\n",
        "quadrature = simpson\n",
        "group_dim = 4\n",
        "trees 8\n",
        "trees = 2\ntrees = 3\n",
    ],
)
def test_invalid_files(tmp_path, text):
    path = tmp_path / "bad.conf"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config_file(tmp_path / "nope.conf")


def test_yaml_must_be_flat(tmp_path):
    path = tmp_path / "nested.yaml"
    path.write_text("train:\n  trees: 4\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_layout_parsing():
    assert ForestLayout.parse("4X16") == ForestLayout(trees=4, branching=16)
    assert ForestLayout.parse(" 2x3 ", depth=2).leaf_count == 18
    with pytest.raises(ValueError):
        ForestLayout.parse("8by8")
