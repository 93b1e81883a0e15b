import json

import pytest

from config.loader import check_key, dump_config, env_overrides, parse_overrides, parse_value, resolve_config
from config.schema import CodecConfig, LossConfig, RunConfig
from config.settings import PROJECT_ROOT
from core.errors import ConfigurationError
from services.run_service import RunService

TOY = str(PROJECT_ROOT / "config" / "runs" / "toy.json")
CITYSCAPES = str(PROJECT_ROOT / "config" / "runs" / "cityscapes.json")


class TestParsing:
    @pytest.mark.parametrize("raw, value", [
        ("false", False), ("3", 3), ("0.5", 0.5), ("[1, 2]", [1, 2]), ("rare_dot", "rare_dot"),
    ])
    def test_parse_value(self, raw, value):
        assert parse_value(raw) == value

    def test_both_override_forms(self):
        assert parse_overrides(["--train.lr=0.01", "--codec.k_channels", "8"]) == [
            ("train.lr", 0.01), ("codec.k_channels", 8)]

    def test_positional_rejected(self):
        with pytest.raises(ConfigurationError):
            parse_overrides(["train.lr=0.01"])

    def test_missing_value(self):
        with pytest.raises(ConfigurationError):
            parse_overrides(["--train.lr"])

    def test_env_prefix(self):
        env = {"VISSC_LOSS__OHEM__THRESH": "0.6", "HOME": "/root"}
        assert env_overrides(env) == [("loss.ohem.thresh", 0.6)]


class TestCheckKey:
    @pytest.mark.parametrize("key", ["train.lr", "loss.ohem.min_kept", "loss.weights.road", "seed"])
    def test_known(self, key):
        check_key(key)

    @pytest.mark.parametrize("key", ["train.learning_rate", "loss.ohem.thresh.x", "nope"])
    def test_unknown_names_full_key(self, key):
        with pytest.raises(ConfigurationError, match=key.replace(".", r"\.")):
            check_key(key)


class TestResolve:
    def test_precedence(self):
        cfg = resolve_config(TOY, [("train.lr", 0.5)], environ={"VISSC_TRAIN__LR": "0.01",
                                                                "VISSC_TRAIN__BATCH_SIZE": "2"})
        assert cfg.train.lr == 0.5
        assert cfg.train.batch_size == 2
        assert cfg.train.iterations == 2000

    def test_defaults_without_file(self):
        cfg = resolve_config(None, environ={})
        assert cfg == RunConfig()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            resolve_config(str(tmp_path / "none.json"), environ={})

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{seed: 1")
        with pytest.raises(ConfigurationError):
            resolve_config(str(path), environ={})

    def test_validation_error_names_location(self):
        with pytest.raises(ConfigurationError, match="train"):
            resolve_config(TOY, [("train.lr", -1.0)], environ={})

    def test_shipped_configs(self):
        toy = resolve_config(TOY, environ={})
        assert toy.codec.n_cls == 4 and toy.loss.important == ["rare_dot"]
        full = resolve_config(CITYSCAPES, environ={})
        assert full.codec.n_cls == 19
        assert full.codec.k_channels == 256
        assert full.loss.ohem.min_kept == 100000

    def test_dump_round_trip(self, tmp_path):
        cfg = resolve_config(TOY, [("loss.ohem.enabled", False)], environ={})
        path = tmp_path / "config.json"
        path.write_text(dump_config(cfg))
        again = resolve_config(str(path), environ={})
        assert again == cfg
        assert dump_config(again) == dump_config(cfg)


class TestSchema:
    def test_seed_propagation(self):
        cfg = RunConfig(seed=11)
        assert cfg.data.seed == cfg.train.seed == cfg.channel.seed == 11

    def test_explicit_section_seed_kept(self):
        cfg = RunConfig.model_validate({"seed": 11, "train": {"seed": 5}})
        assert cfg.train.seed == 5 and cfg.data.seed == 11

    def test_n_cls_mismatch(self):
        with pytest.raises(ValueError):
            RunConfig.model_validate({"data": {"n_cls": 4}, "codec": {"n_cls": 5}})

    def test_unknown_class_name(self):
        with pytest.raises(ValueError):
            RunConfig.model_validate({"loss": {"important": ["car"]}})

    def test_unknown_section_key(self):
        with pytest.raises(ValueError):
            RunConfig.model_validate({"train": {"epochs": 3}})

    def test_heads_must_divide(self):
        with pytest.raises(ValueError):
            CodecConfig(embed_dim=24, heads=[5, 2, 4, 8])

    def test_full_preset(self):
        full = CodecConfig.full()
        assert full.embed_dim == 96 and full.depths == [2, 2, 18, 2] and full.k_channels == 256

    def test_ohem_thresh_range(self):
        with pytest.raises(ValueError):
            LossConfig.model_validate({"ohem": {"thresh": 0.0}})

    def test_crop_divisible_by_32(self):
        with pytest.raises(ValueError):
            RunConfig.model_validate({"data": {"crop_size": [60, 64]}})


class TestRunService:
    def test_create_writes_config(self, tmp_path):
        cfg = RunConfig(seed=4)
        service = RunService(str(tmp_path))
        run = service.create("train", cfg)
        service.finish(run)
        assert run.path.parent == tmp_path
        assert run.path.name.startswith("train-")
        assert json.loads((run.path / "config.json").read_text())["seed"] == 4
        assert (run.path / "run.log").is_file()

    def test_unique_directories(self, tmp_path):
        service = RunService(str(tmp_path))
        a = service.create("eval", RunConfig())
        b = service.create("eval", RunConfig())
        service.finish(a)
        service.finish(b, ok=False)
        assert a.path != b.path
