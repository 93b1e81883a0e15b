import numpy as np
import pandas as pd
import pytest
import torch

from config.loader import resolve_config
from config.schema import ChannelConfig
from config.settings import PROJECT_ROOT
from core.codec import build_model, checkpoint_digest, load_checkpoint, save_checkpoint
from core.data import build_dataset
from core.errors import ConfigurationError, NonFiniteLossError
from core.loss import LossBreakdown
from core.metrics import ConfusionMatrix
from services.ablation_registry import AblationRegistry, Variant, ablation_registry
from services.evaluation_service import SEMANTIC_SCHEME, evaluation_service
from services.experiment_service import experiment_service
from services.trainer_service import LOG_COLUMNS, create_trainer


def first_batch(cfg, n=2):
    dataset = build_dataset(cfg.data, train=True)
    images, labels, ids = zip(*(dataset[i] for i in range(n)))
    return torch.stack(images), torch.stack(labels), list(ids)


class TestTrainStep:
    def test_finite_step(self, toy_cfg):
        trainer = create_trainer(toy_cfg)
        images, labels, ids = first_batch(toy_cfg)
        result = trainer.train_step(images, labels, ids)
        assert torch.isfinite(torch.tensor(result.loss))
        assert result.aux is not None
        assert toy_cfg.train.snr_low <= result.snr_db <= toy_cfg.train.snr_high
        assert trainer.iteration == 1

    def test_step_changes_parameters(self, toy_cfg):
        trainer = create_trainer(toy_cfg)
        before = checkpoint_digest(trainer.model.state_dict())
        trainer.train_step(*first_batch(toy_cfg))
        assert checkpoint_digest(trainer.model.state_dict()) != before

    def test_non_finite_loss(self, toy_cfg, monkeypatch):
        trainer = create_trainer(toy_cfg)
        nan = torch.tensor(float("nan"))

        def broken(logits, labels, aux_logits=None):
            return LossBreakdown(total=nan, main=nan, aux=None, ce=nan, iou=nan, kept_fraction=1.0)

        monkeypatch.setattr(trainer, "criterion", broken)
        images, labels, ids = first_batch(toy_cfg)
        with pytest.raises(NonFiniteLossError) as info:
            trainer.train_step(images, labels, ids, snr_db=5.0)
        assert info.value.iteration == 0
        assert info.value.snr_db == 5.0
        assert info.value.batch_ids == ids

    def test_warmup(self, toy_cfg):
        cfg = toy_cfg.model_copy(update={"train": toy_cfg.train.model_copy(update={"warmup_iters": 4})})
        trainer = create_trainer(cfg)
        assert trainer.lr_at(0) == pytest.approx(2.5e-4)
        assert trainer.lr_at(3) == pytest.approx(1e-3)
        assert trainer.lr_at(100) == pytest.approx(1e-3)


class TestTrain:
    def test_outputs(self, toy_cfg, tmp_path):
        trainer = create_trainer(toy_cfg)
        summary = trainer.train(build_dataset(toy_cfg.data, train=True), tmp_path / "run")
        assert summary.iterations == 3
        assert summary.checkpoint.is_file()
        assert (tmp_path / "run" / "checkpoints" / "iter_2.pt").is_file()

        log = pd.read_csv(summary.log_path)
        assert list(log.columns) == LOG_COLUMNS
        assert log["iter"].tolist() == [1, 2, 3]
        assert log["loss"].iloc[-1] == pytest.approx(summary.final_loss)

        model, meta = load_checkpoint(summary.checkpoint)
        assert checkpoint_digest(model.state_dict()) == summary.digest

    def test_same_seed_same_weights(self, toy_cfg):
        digests = []
        for _ in range(2):
            trainer = create_trainer(toy_cfg)
            digests.append(trainer.train(build_dataset(toy_cfg.data, train=True)).digest)
        assert digests[0] == digests[1]

    def test_different_seed_different_weights(self, toy_cfg):
        other = toy_cfg.model_copy(update={"train": toy_cfg.train.model_copy(update={"seed": 99})})
        a = create_trainer(toy_cfg).train(build_dataset(toy_cfg.data, train=True), iterations=1)
        b = create_trainer(other).train(build_dataset(toy_cfg.data, train=True), iterations=1)
        assert a.digest != b.digest


class TestEvaluation:
    def _model(self, cfg):
        torch.manual_seed(0)
        return build_model(cfg.codec, dtype=torch.float64)

    def test_rows(self, toy_cfg):
        model = self._model(toy_cfg)
        dataset = build_dataset(toy_cfg.data, train=False)
        res = evaluation_service.evaluate(model, dataset, toy_cfg.channel, [5.0, 15.0],
                                          toy_cfg.data.class_names, batch_size=2)
        assert [r["snr_db"] for r in res.rows] == [5.0, 15.0]
        assert all(r["R"] == 96.0 and r["scheme"] == SEMANTIC_SCHEME for r in res.rows)
        assert res.curve.snr_db == [5.0, 15.0]
        assert all(cm.total == 4 * 64 * 64 for cm in res.matrices)

    def test_independent_of_batch_size(self, toy_cfg):
        model = self._model(toy_cfg)
        dataset = build_dataset(toy_cfg.data, train=False)
        args = (model, dataset, toy_cfg.channel, [5.0], toy_cfg.data.class_names)
        a = evaluation_service.evaluate(*args, seed=1, batch_size=1)
        b = evaluation_service.evaluate(*args, seed=1, batch_size=4)
        assert (a.matrices[0].counts == b.matrices[0].counts).all()

    def test_identity_channel_matches_segment(self, toy_cfg):
        model = self._model(toy_cfg).eval()
        dataset = build_dataset(toy_cfg.data, train=False)
        res = evaluation_service.evaluate(model, dataset, ChannelConfig(mode="identity"), [5.0],
                                          toy_cfg.data.class_names, batch_size=4)
        images = torch.stack([dataset[i][0] for i in range(len(dataset))]).double()
        labels = torch.stack([dataset[i][1] for i in range(len(dataset))])
        with torch.no_grad():
            _, label_map = model.segment(images)
        cm = ConfusionMatrix(4).update(label_map.numpy(), labels.numpy())
        assert (cm.counts == res.matrices[0].counts).all()

    def test_checkpoint_round_trip_same_confusion(self, toy_cfg, tmp_path):
        torch.manual_seed(0)
        model = build_model(toy_cfg.codec)
        loaded, _ = load_checkpoint(save_checkpoint(tmp_path / "ck.pt", model, toy_cfg))
        dataset = build_dataset(toy_cfg.data, train=False)
        args = (dataset, toy_cfg.channel, [1.0, 10.0], toy_cfg.data.class_names)
        a = evaluation_service.evaluate(model, *args, seed=4, batch_size=2)
        b = evaluation_service.evaluate(loaded, *args, seed=4, batch_size=2)
        for ca, cb in zip(a.matrices, b.matrices):
            assert (ca.counts == cb.counts).all()


class TestAblationRegistry:
    def test_axes(self):
        axes = AblationRegistry().list_axes()
        assert len(axes["stb_combo"]) == 4
        assert axes["loss"] == ["traditional_ce", "importance_aware"]
        assert axes["ohem"] == ["without_ohem", "with_ohem"]

    def test_unknown_axis(self):
        with pytest.raises(ConfigurationError):
            ablation_registry.get_variants("dropout")

    def test_variant_apply(self, toy_cfg):
        variant = ablation_registry.get_variants("loss")[0]
        cfg = variant.apply(toy_cfg)
        assert not cfg.loss.use_iou and not cfg.loss.use_weights and not cfg.loss.ohem.enabled
        assert toy_cfg.loss.use_iou

    def test_register_axis(self):
        registry = AblationRegistry()
        registry.register_axis("k", [Variant("k4", {"codec.k_channels": 4})])
        assert registry.list_axes()["k"] == ["k4"]


class TestExperiments:
    def test_ablate_writes_table(self, toy_cfg, run_dir):
        path = experiment_service.ablate(toy_cfg, "ohem", run_dir)
        df = pd.read_csv(path, index_col=0)
        assert list(df.columns) == ["without_ohem", "with_ohem"]
        assert list(df.index) == toy_cfg.data.class_names + ["mIoU"]
        assert (run_dir / "without_ohem" / "checkpoint.pt").is_file()

    def test_evaluate_checkpoint(self, toy_cfg, run_dir):
        torch.manual_seed(0)
        ckpt = save_checkpoint(run_dir / "model.pt", build_model(toy_cfg.codec), toy_cfg)
        path = experiment_service.evaluate_checkpoint(toy_cfg, str(ckpt), run_dir, velocities=[50.0, 120.0])
        df = pd.read_csv(path)
        assert len(df) == 4
        assert sorted(df["velocity_kmh"].unique()) == [50.0, 120.0]

    def test_sweep_compression_checks_k(self, toy_cfg, run_dir):
        ckpt = save_checkpoint(run_dir / "k8.pt", build_model(toy_cfg.codec), toy_cfg)
        with pytest.raises(ConfigurationError):
            experiment_service.sweep_compression(toy_cfg, {16: str(ckpt)}, 10.0, run_dir)
        with pytest.raises(ConfigurationError):
            experiment_service.sweep_compression(toy_cfg, {8: str(run_dir / "missing.pt")}, 10.0, run_dir)

    def test_baseline_needs_segmenter(self, toy_cfg, run_dir):
        with pytest.raises(ConfigurationError):
            experiment_service.run_baseline(toy_cfg, run_dir)

    @pytest.mark.slow
    def test_ablate_stb_combo_with_transfer(self, toy_cfg, run_dir):
        path = experiment_service.ablate(toy_cfg, "stb_combo", run_dir)
        df = pd.read_csv(path, index_col=0)
        assert sorted(df.columns) == sorted(["3-5-7-9", "2-2-2-18", "2-2-9-9", "2-2-18-2"])
        assert df.loc["mIoU"].between(0.0, 1.0).all()



TREND_SEEDS = (0, 1, 2)
TOY = str(PROJECT_ROOT / "config" / "runs" / "toy.json")


@pytest.fixture(scope="module")
def toy_runs(tmp_path_factory):
    """按 (seed, 覆盖项) 缓存的完整 toy 训练（2000 次迭代）"""
    root = tmp_path_factory.mktemp("toy_runs")
    cache = {}

    def get(seed, overrides=None):
        overrides = dict(overrides or {})
        key = (seed, tuple(sorted(overrides.items())))
        if key not in cache:
            cfg = resolve_config(TOY, [("seed", seed), *overrides.items()], environ={})
            trainer = create_trainer(cfg)
            summary = trainer.train(build_dataset(cfg.data, train=True), root / f"run{len(cache)}")
            cache[key] = (cfg, trainer.model, summary)
        return cache[key]

    return get


def score(cfg, model, snr_grid, channel=None):
    res = evaluation_service.evaluate(model, build_dataset(cfg.data, train=False), channel or cfg.channel,
                                      snr_grid, cfg.data.class_names, seed=cfg.seed,
                                      batch_size=cfg.eval.batch_size)
    return res.rows


def largest_drop(snr_grid, miou, span=4.0):
    """SNR 相差不超过 span 的任意两点之间 mIoU 的最大下降"""
    return max(miou[j] - miou[i] for i in range(len(snr_grid)) for j in range(i + 1, len(snr_grid))
               if snr_grid[j] - snr_grid[i] <= span)


@pytest.mark.slow
class TestToyTrends:
    def test_training_reaches_target_miou(self, toy_runs):
        mious = [score(*toy_runs(seed)[:2], [19.0])[0]["miou"] for seed in TREND_SEEDS]
        assert np.mean(mious) >= 0.85

    def test_late_loss_below_early_loss(self, toy_runs):
        for seed in TREND_SEEDS:
            loss = pd.read_csv(toy_runs(seed)[2].log_path)["loss"]
            assert len(loss) == 2000
            assert loss.iloc[1799:2000].mean() < loss.iloc[:200].mean()

    def test_miou_increases_with_snr(self, toy_runs):
        curves = np.array([[r["miou"] for r in score(*toy_runs(seed)[:2], [1.0, 10.0, 19.0])]
                           for seed in TREND_SEEDS])
        m1, m10, m19 = curves.mean(axis=0)
        assert m19 >= m10 >= m1

    def test_perfect_channel_upper_bounds_grid(self, toy_runs):
        for seed in TREND_SEEDS:
            cfg, model, _ = toy_runs(seed)
            perfect = score(cfg, model, [cfg.eval.snr_grid[0]], ChannelConfig(mode="identity"))[0]["miou"]
            noisy = [r["miou"] for r in score(cfg, model, cfg.eval.snr_grid)]
            assert all(perfect >= m for m in noisy)

    def test_baseline_cliff_versus_graceful_semantic(self, toy_runs):
        grid = [float(s) for s in range(0, 11)]
        awgn = ChannelConfig(mode="awgn")
        semantic, baseline = [], []
        for seed in TREND_SEEDS:
            cfg, model, _ = toy_runs(seed)
            semantic.append([r["miou"] for r in score(cfg, model, grid, awgn)])
            res = evaluation_service.evaluate_baseline(model, build_dataset(cfg.data, train=False), cfg.baseline,
                                                       awgn, grid, cfg.data.class_names, seed=seed)
            baseline.append(res.curve.miou)
        assert largest_drop(grid, list(np.mean(baseline, axis=0))) >= 0.3
        assert largest_drop(grid, list(np.mean(semantic, axis=0))) <= 0.15

    def test_miou_nonincreasing_with_compression(self, toy_runs):
        means = []
        for k in (32, 8, 2):
            mious = [score(*toy_runs(seed, {"codec.k_channels": k})[:2], [19.0])[0]["miou"]
                     for seed in TREND_SEEDS]
            means.append(np.mean(mious))
        assert means[0] >= means[1] >= means[2]

    def test_importance_loss_lifts_rare_class(self, toy_runs):
        plain_ce = ablation_registry.get_variants("loss")[0]
        aware, plain = [], []
        for seed in TREND_SEEDS:
            aware.append(score(*toy_runs(seed)[:2], [19.0])[0]["iou_rare_dot"])
            plain.append(score(*toy_runs(seed, plain_ce.overrides)[:2], [19.0])[0]["iou_rare_dot"])
        assert np.mean(aware) > np.mean(plain)
