"""
实验编排服务

SNR 扫描、压缩率扫描、单检查点评测、传统链路评测与消融实验，
结果统一写到运行目录下的 CSV（results.csv 为指标 CSV）。
"""
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd
from loguru import logger

from config.presets import STB_TRANSFER_SOURCE
from config.schema import RunConfig
from core.codec import load_checkpoint, transfer_init
from core.data import build_dataset
from core.errors import ConfigurationError
from core.metrics import iou_per_class, miou, write_results
from services.ablation_registry import ablation_registry
from services.evaluation_service import EvaluationService, evaluation_service
from services.plot_service import plot_service
from services.trainer_service import Trainer

RESULTS_FILE = "results.csv"
BASELINE_STATS_FILE = "baseline_stats.csv"


class ExperimentService:
    def __init__(self, evaluation: EvaluationService = evaluation_service):
        self.evaluation = evaluation

    @staticmethod
    def miou_class_ids(cfg: RunConfig) -> Optional[List[int]]:
        names = cfg.data.class_names
        return [names.index(c) for c in cfg.eval.miou_classes] or None

    def _write(self, cfg: RunConfig, rows: List[Dict], run_dir: Path, plot: bool, x: str = "snr_db") -> Path:
        path = write_results(rows, Path(run_dir) / RESULTS_FILE, cfg.data.class_names)
        logger.info(f"💾 结果已写入 {path} ({len(rows)} 行)")
        if plot:
            plot_service.plot(path, Path(run_dir) / ("miou_vs_snr.png" if x == "snr_db" else "miou_vs_r.png"), x=x)
        return path

    def _baseline_rows(self, cfg: RunConfig, dataset, snr_grid: Sequence[float], run_dir: Path,
                       baseline_cfg=None, channel_cfg=None, segmenter=None) -> List[Dict]:
        if segmenter is None:
            segmenter, _ = load_checkpoint(cfg.baseline.segmenter_checkpoint)
        res = self.evaluation.evaluate_baseline(
            segmenter, dataset, baseline_cfg or cfg.baseline, channel_cfg or cfg.channel, snr_grid,
            cfg.data.class_names, seed=cfg.seed, miou_classes=self.miou_class_ids(cfg))
        stats_path = Path(run_dir) / BASELINE_STATS_FILE
        pd.DataFrame(res.extra).to_csv(stats_path, mode="a", header=not stats_path.exists(), index=False)
        return res.rows

    def evaluate_checkpoint(self, cfg: RunConfig, checkpoint: str, run_dir: Path,
                            velocities: Optional[Sequence[float]] = None, plot: bool = False,
                            include_baseline: bool = False) -> Path:
        """单个检查点在 eval.snr_grid 上的 mIoU 曲线（可附带传统链路）"""
        model, _ = load_checkpoint(checkpoint)
        dataset = build_dataset(cfg.data, train=False)
        rows = []
        for v in velocities or [cfg.channel.velocity_kmh]:
            channel = cfg.channel.model_copy(update={"velocity_kmh": float(v)})
            res = self.evaluation.evaluate(model, dataset, channel, cfg.eval.snr_grid, cfg.data.class_names,
                                           n_realizations=cfg.eval.n_realizations, seed=cfg.seed,
                                           batch_size=cfg.eval.batch_size,
                                           miou_classes=self.miou_class_ids(cfg))
            rows.extend(res.rows)
            if include_baseline:
                rows.extend(self._baseline_rows(cfg, dataset, cfg.eval.snr_grid, run_dir, channel_cfg=channel))
        return self._write(cfg, rows, run_dir, plot)

    def sweep_snr(self, cfg: RunConfig, checkpoint: str, run_dir: Path,
                  velocities: Optional[Sequence[float]] = None, plot: bool = False) -> Path:
        """语义链路 + （配置了分割网络时）传统链路的 mIoU-SNR 扫描"""
        include_baseline = cfg.baseline.segmenter_checkpoint is not None
        if not include_baseline:
            logger.warning("⚠️ 未配置 baseline.segmenter_checkpoint，只评测语义链路")
        return self.evaluate_checkpoint(cfg, checkpoint, run_dir, velocities, plot, include_baseline)

    def sweep_compression(self, cfg: RunConfig, checkpoints: Dict[int, str], snr_db: float,
                          run_dir: Path, plot: bool = False) -> Path:
        """每个 K 一个检查点，固定 SNR 下的 mIoU-R"""
        if not checkpoints:
            raise ConfigurationError("压缩率扫描至少需要一个检查点")
        for K, path in checkpoints.items():
            if not Path(path).is_file():
                raise ConfigurationError(f"缺少 K={K} 的检查点: {path}")

        dataset = build_dataset(cfg.data, train=False)
        rows = []
        for K, path in checkpoints.items():
            model, _ = load_checkpoint(path)
            if model.cfg.k_channels != K:
                raise ConfigurationError(f"检查点 {path} 的 K={model.cfg.k_channels}，与声明的 K={K} 不一致")
            res = self.evaluation.evaluate(model, dataset, cfg.channel, [snr_db], cfg.data.class_names,
                                           n_realizations=cfg.eval.n_realizations, seed=cfg.seed,
                                           batch_size=cfg.eval.batch_size,
                                           miou_classes=self.miou_class_ids(cfg))
            rows.extend(res.rows)

        if cfg.baseline.segmenter_checkpoint is not None:
            segmenter, _ = load_checkpoint(cfg.baseline.segmenter_checkpoint)
            for K in checkpoints:
                bcfg = cfg.baseline.model_copy(update={"target_r": 768.0 / K})
                rows.extend(self._baseline_rows(cfg, dataset, [snr_db], run_dir, baseline_cfg=bcfg,
                                                segmenter=segmenter))
        return self._write(cfg, rows, run_dir, plot, x="R")

    def run_baseline(self, cfg: RunConfig, run_dir: Path, segmenter_checkpoint: Optional[str] = None,
                     plot: bool = False) -> Path:
        """传统链路在 eval.snr_grid 上的 mIoU 曲线"""
        checkpoint = segmenter_checkpoint or cfg.baseline.segmenter_checkpoint
        if checkpoint is None:
            raise ConfigurationError("传统链路需要分割网络 (--checkpoint 或 baseline.segmenter_checkpoint)")
        segmenter, _ = load_checkpoint(checkpoint)
        dataset = build_dataset(cfg.data, train=False)
        rows = self._baseline_rows(cfg, dataset, cfg.eval.snr_grid, run_dir, segmenter=segmenter)
        return self._write(cfg, rows, run_dir, plot)

    def ablate(self, cfg: RunConfig, axis: str, run_dir: Path) -> Path:
        """
        训练并评测某个消融轴的全部变体，输出逐类 IoU 表

        stb_combo 轴且 ablation.transfer 开启时，先训练 [2, 2, 18, 2]，
        其余组合以其权重迁移初始化。
        """
        variants = ablation_registry.get_variants(axis)
        run_dir = Path(run_dir)
        iterations = cfg.ablation.iterations if cfg.ablation.iterations is not None else cfg.train.iterations
        transfer = axis == "stb_combo" and cfg.ablation.transfer
        order = sorted(variants, key=lambda v: v.name != STB_TRANSFER_SOURCE) if transfer else variants

        train_set = build_dataset(cfg.data, train=True)
        eval_set = build_dataset(cfg.data, train=False)
        channel = cfg.channel.model_copy(update={"snr_db": cfg.ablation.snr_test})
        source_state = None
        table: Dict[str, List[float]] = {}

        for variant in order:
            vcfg = variant.apply(cfg)
            logger.info(f"🚀 消融 {axis}: 变体 {variant.name}")
            trainer = Trainer(vcfg)
            if transfer and source_state is not None:
                transfer_init(trainer.model, source_state)
            trainer.train(train_set, run_dir / variant.name, iterations)
            if transfer and variant.name == STB_TRANSFER_SOURCE:
                source_state = {k: v.detach().clone() for k, v in trainer.model.state_dict().items()}

            res = self.evaluation.evaluate(trainer.model, eval_set, channel, [cfg.ablation.snr_test],
                                           cfg.data.class_names, seed=cfg.seed,
                                           batch_size=cfg.eval.batch_size)
            cm = res.matrices[0]
            table[variant.name] = list(iou_per_class(cm)) + [miou(cm, self.miou_class_ids(cfg))]

        index = list(cfg.data.class_names) + ["mIoU"]
        df = pd.DataFrame({v.name: table[v.name] for v in variants}, index=index)
        df.index.name = "class"
        path = run_dir / f"ablation_{axis}.csv"
        df.to_csv(path, float_format="%.6f")
        logger.info(f"📊 消融表已写入 {path}\n{df.round(4).to_string()}")
        return path


# 全局实验服务实例
experiment_service = ExperimentService()
