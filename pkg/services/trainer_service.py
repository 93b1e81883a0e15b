"""
端到端训练服务

信道在环训练：每步从 U[snr_low, snr_high] 抽取 SNR，经完整发送端 → 信道 → 接收端，
以 b1·L_IA(主头) + b2·L_IA(辅助头) 为目标做一次 Adam 更新。
"""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
import torch
from loguru import logger
from torch.utils.data import DataLoader

from config import settings
from config.schema import RunConfig
from core.channel import block_generator
from core.codec import VisSemCom, build_model, checkpoint_digest, save_checkpoint
from core.data import SegmentationDataset, default_class_weights
from core.errors import NonFiniteLossError
from core.loss import ImportanceAwareCriterion
from utils import derive_seed, seed_everything

LOG_COLUMNS = ["iter", "loss", "ce", "iou_loss", "aux", "snr_db"]

# 随机流标识，与 derive_seed 组合成互不相关的流
_STREAM_SNR = 2
_STREAM_CHANNEL = 3
_STREAM_LOADER = 4


@dataclass
class StepResult:
    iteration: int
    loss: float
    ce: float
    iou: float
    aux: Optional[float]
    snr_db: float


@dataclass
class TrainSummary:
    iterations: int
    final_loss: float
    checkpoint: Optional[Path]
    digest: str
    log_path: Optional[Path]


class Trainer:
    def __init__(self, cfg: RunConfig, model: Optional[VisSemCom] = None,
                 device: Optional[str] = None, dtype: torch.dtype = torch.float32):
        self.cfg = cfg
        self.device = device or settings.DEVICE
        seed_everything(cfg.train.seed)
        self.model = model if model is not None else build_model(cfg.codec, dtype=dtype, device=self.device)
        self.model.to(self.device)
        self.weights = default_class_weights(cfg.data.class_names, cfg.loss.important or None, cfg.loss.weights)
        self.criterion = ImportanceAwareCriterion(cfg.loss, self.weights)
        t = cfg.train
        self.optimizer = torch.optim.Adam(self.model.parameters(), lr=t.lr, betas=tuple(t.betas),
                                          eps=t.eps, weight_decay=t.weight_decay)
        self.snr_rng = np.random.default_rng(derive_seed(t.seed, _STREAM_SNR))
        self.iteration = 0

    def sample_snr(self) -> float:
        return float(self.snr_rng.uniform(self.cfg.train.snr_low, self.cfg.train.snr_high))

    def lr_at(self, iteration: int) -> float:
        """warmup_iters > 0 时线性升温，之后保持常数"""
        t = self.cfg.train
        if t.warmup_iters > 0 and iteration < t.warmup_iters:
            return t.lr * (iteration + 1) / t.warmup_iters
        return t.lr

    def train_step(self, images: torch.Tensor, labels: torch.Tensor,
                   batch_ids: Optional[List[int]] = None, snr_db: Optional[float] = None) -> StepResult:
        self.model.train()
        snr = self.sample_snr() if snr_db is None else snr_db
        channel_cfg = self.cfg.channel.model_copy(update={"snr_db": snr})
        generator = block_generator(self.cfg.channel.seed, _STREAM_CHANNEL, self.iteration)

        dtype = next(self.model.parameters()).dtype
        images = images.to(self.device, dtype=dtype)
        labels = labels.to(self.device)

        out = self.model(images, channel_cfg, generator)
        breakdown = self.criterion(out.logits, labels, out.aux_logits)

        if not torch.isfinite(breakdown.total):
            logger.error(f"❌ 损失非有限: iter={self.iteration}, snr={snr:.2f} dB, batch={batch_ids}")
            raise NonFiniteLossError(self.iteration, snr, batch_ids)

        for group in self.optimizer.param_groups:
            group["lr"] = self.lr_at(self.iteration)
        self.optimizer.zero_grad(set_to_none=True)
        breakdown.total.backward()
        if self.cfg.train.grad_clip:
            torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.cfg.train.grad_clip)
        self.optimizer.step()

        result = StepResult(
            iteration=self.iteration,
            loss=float(breakdown.total.detach()),
            ce=float(breakdown.ce.detach()),
            iou=float(breakdown.iou.detach()),
            aux=float(breakdown.aux.detach()) if breakdown.aux is not None else None,
            snr_db=snr,
        )
        self.iteration += 1
        return result

    def make_loader(self, dataset: SegmentationDataset) -> DataLoader:
        g = torch.Generator()
        g.manual_seed(derive_seed(self.cfg.train.seed, _STREAM_LOADER))
        return DataLoader(dataset, batch_size=self.cfg.train.batch_size, shuffle=True, generator=g,
                          num_workers=settings.NUM_WORKERS, drop_last=False)

    def _flush_log(self, rows: list, path: Optional[Path]):
        if path is None or not rows:
            return
        pd.DataFrame(rows, columns=LOG_COLUMNS).to_csv(path, mode="a", header=not path.exists(), index=False)
        rows.clear()

    def train(self, dataset: SegmentationDataset, run_dir: Optional[Path] = None,
              iterations: Optional[int] = None) -> TrainSummary:
        """训练到 iterations 次更新；给定 run_dir 时写训练日志与检查点"""
        t = self.cfg.train
        total = t.iterations if iterations is None else iterations
        run_dir = Path(run_dir) if run_dir is not None else None
        log_path = None
        if run_dir is not None:
            run_dir.mkdir(parents=True, exist_ok=True)
            log_path = run_dir / "train_log.csv"
        loader = self.make_loader(dataset)
        pending: list = []
        last: Optional[StepResult] = None

        logger.info(f"🚀 开始训练: {total} 次迭代, batch={t.batch_size}, lr={t.lr}, "
                    f"SNR∈[{t.snr_low}, {t.snr_high}] dB, 信道={self.cfg.channel.mode}")
        epoch = 0
        while self.iteration < total:
            dataset.set_epoch(epoch)
            for images, labels, ids in loader:
                last = self.train_step(images, labels, batch_ids=ids.tolist())
                pending.append([last.iteration + 1, last.loss, last.ce, last.iou, last.aux, last.snr_db])

                if (t.log_every and self.iteration % t.log_every == 0) or self.iteration == total:
                    logger.info(f"📊 iter {self.iteration}/{total} loss={last.loss:.4f} ce={last.ce:.4f} "
                                f"iou={last.iou:.4f} snr={last.snr_db:.1f} dB")
                    self._flush_log(pending, log_path)
                if run_dir is not None and t.checkpoint_every and self.iteration % t.checkpoint_every == 0 \
                        and self.iteration < total:
                    save_checkpoint(run_dir / "checkpoints" / f"iter_{self.iteration}.pt",
                                    self.model, self.cfg, self.iteration, self.optimizer)
                if self.iteration >= total:
                    break
            epoch += 1

        self._flush_log(pending, log_path)
        checkpoint = None
        if run_dir is not None:
            checkpoint = save_checkpoint(run_dir / "checkpoint.pt", self.model, self.cfg,
                                         self.iteration, self.optimizer)
        digest = checkpoint_digest(self.model.state_dict())
        logger.info(f"✅ 训练完成: iter={self.iteration}, 参数摘要 {digest[:12]}")
        return TrainSummary(iterations=self.iteration, final_loss=last.loss if last else float("nan"),
                            checkpoint=checkpoint, digest=digest, log_path=log_path)


def create_trainer(cfg: RunConfig, model: Optional[VisSemCom] = None, **kwargs) -> Trainer:
    return Trainer(cfg, model=model, **kwargs)
