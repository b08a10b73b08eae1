"""Tests for config files, overrides and TrainConfig validation."""
import pytest

from app.core.config import build_train_config, parse_overrides, read_config_file
from app.core.errors import ConfigurationError
from app.schemas.config import TrainConfig


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# tiny run\n"
        "n_aus = 4\n"
        "k_neighbors = 2   # two neighbours\n"
        "\n"
        "lambda = 0.01\n"
        "stage1_loss = wbce\n"
        "use_edge_loss = false\n",
        encoding="utf-8",
    )
    return path


class TestTrainConfig:
    def test_defaults(self):
        config = TrainConfig()
        assert (config.beta1, config.beta2, config.weight_decay) == (0.9, 0.999, 5e-4)
        assert (config.stage1_epochs, config.stage2_epochs, config.batch_size) == (20, 20, 64)
        assert (config.stage1_lr, config.stage2_lr) == (1e-4, 1e-6)
        assert config.lambda_ == 0.05
        assert config.has_stage2

    @pytest.mark.parametrize("k", [0, 6])
    def test_k_outside_range(self, k):
        with pytest.raises(ValueError):
            TrainConfig(n_aus=6, k_neighbors=k)

    def test_relation_modules_need_afg(self):
        with pytest.raises(ValueError):
            TrainConfig(use_afg=False)

    def test_edge_loss_needs_mefl(self):
        with pytest.raises(ValueError):
            TrainConfig(use_mefl=False)

    def test_lambda_alias_round_trip(self):
        config = TrainConfig.model_validate({"lambda": 0.01})
        assert TrainConfig.model_validate(config.model_dump(by_alias=True)) == config


class TestConfigFile:
    def test_parsing(self, config_file):
        assert read_config_file(config_file) == {
            "n_aus": "4",
            "k_neighbors": "2",
            "lambda": "0.01",
            "stage1_loss": "wbce",
            "use_edge_loss": "false",
        }

    def test_typed_values(self, config_file):
        config = build_train_config(config_file)
        assert config.n_aus == 4
        assert config.lambda_ == 0.01
        assert config.stage1_loss == "wbce"
        assert config.use_edge_loss is False

    def test_overrides_win_over_file(self, config_file):
        config = build_train_config(config_file, parse_overrides(["k_neighbors=3", "seed = 9"]))
        assert config.k_neighbors == 3
        assert config.seed == 9
        assert config.n_aus == 4

    def test_unknown_key(self, config_file):
        with pytest.raises(ConfigurationError, match="learning_rate"):
            build_train_config(config_file, {"learning_rate": "0.1"})

    def test_line_without_equals(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("n_aus 4\n", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="bad.cfg:1"):
            read_config_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            build_train_config(tmp_path / "absent.cfg")

    def test_negative_seed(self):
        with pytest.raises(ConfigurationError, match="seed"):
            build_train_config(overrides={"seed": "-1"})

    def test_malformed_override(self):
        with pytest.raises(ConfigurationError):
            parse_overrides(["n_aus"])
