import json

import pytest

from src.config import FitConfig, MixupConfig, RunConfig, TrainConfig, TreeConfig
from src.errors import ConfigError


class TestDataclassValidation:
    @pytest.mark.parametrize("kwargs", [{"max_depth": -1}, {"min_leaf": 0}, {"n_thresholds": 0},
                                        {"partition_by": "random"}, {"n_jobs": 0}])
    def test_tree_config(self, kwargs):
        with pytest.raises(ConfigError):
            TreeConfig(**kwargs)

    def test_fit_config(self):
        with pytest.raises(ConfigError):
            FitConfig(ridge_lambda=-1.0)
        with pytest.raises(ConfigError):
            FitConfig(tol=0.0)

    def test_train_config(self):
        with pytest.raises(ConfigError):
            TrainConfig(batch_size=0)
        with pytest.raises(ConfigError):
            TrainConfig(learning_rate=0.0)

    def test_mixup_config(self):
        with pytest.raises(ConfigError):
            MixupConfig(multiplier=-0.5)


class TestRunConfigResolve:
    def test_defaults(self):
        cfg = RunConfig.resolve(None, {})
        assert cfg.max_depth == 4
        assert cfg.routing == "hard"
        assert cfg.soft_strategy == "path"

    def test_flag_beats_file_beats_default(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"max_depth": 2, "min_leaf": 7}))
        cfg = RunConfig.resolve(str(path), {"max_depth": 5, "min_leaf": None})
        assert cfg.max_depth == 5
        assert cfg.min_leaf == 7
        assert cfg.n_thresholds == 15

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            RunConfig.resolve(str(tmp_path / "absent.json"), {})

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{max_depth: 2")
        with pytest.raises(ConfigError):
            RunConfig.resolve(str(path), {})

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="object"):
            RunConfig.resolve(str(path), {})

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"max_dept": 2}))
        with pytest.raises(ConfigError):
            RunConfig.resolve(str(path), {})

    @pytest.mark.parametrize("overrides", [{"max_depth": -1}, {"routing": "fuzzy"},
                                           {"train_fraction": 1.0}, {"tol": 0.0}])
    def test_out_of_range(self, overrides):
        with pytest.raises(ConfigError):
            RunConfig.resolve(None, overrides)


class TestRunConfigViews:
    def test_tree_config(self):
        cfg = RunConfig(max_depth=2, min_leaf=5, ridge_lambda=0.5, mixup=True, similarity_window=3.0, seed=9)
        tree = cfg.tree_config()
        assert (tree.max_depth, tree.min_leaf, tree.seed) == (2, 5, 9)
        assert tree.fit.ridge_lambda == 0.5
        assert tree.mixup.enabled
        assert tree.mixup.similarity_window == 3.0

    def test_train_config(self):
        train = RunConfig(epochs=3, dropout_enabled=False, seed=2).train_config()
        assert (train.epochs, train.dropout_enabled, train.seed) == (3, False, 2)

    def test_mlp_layers(self):
        assert RunConfig(mlp_hidden=[8, 4]).mlp_layers == (8, 4)
        assert RunConfig(mlp_hidden=[]).mlp_layers == ()
