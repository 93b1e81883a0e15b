"""
检查点读写与跨结构权重迁移
"""
import hashlib
import random
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import torch
from loguru import logger

from config.schema import CodecConfig, RunConfig
from core.errors import ConfigurationError, DataError
from .model import VisSemCom

CHECKPOINT_VERSION = 1


def capture_rng_state() -> dict:
    return {
        "python": random.getstate(),
        "numpy": np.random.get_state(),
        "torch": torch.get_rng_state(),
    }


def restore_rng_state(state: dict):
    random.setstate(state["python"])
    np.random.set_state(state["numpy"])
    torch.set_rng_state(state["torch"])


def save_checkpoint(path, model: VisSemCom, run_cfg: Optional[RunConfig] = None, iteration: int = 0,
                    optimizer: Optional[torch.optim.Optimizer] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "version": CHECKPOINT_VERSION,
        "state_dict": {k: v.detach().cpu() for k, v in model.state_dict().items()},
        "codec_config": model.cfg.model_dump(),
        "run_config": run_cfg.model_dump() if run_cfg is not None else None,
        "iteration": iteration,
        "rng_state": capture_rng_state(),
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
    }
    torch.save(payload, path)
    logger.info(f"💾 检查点已保存: {path} (iter={iteration})")
    return path


def read_checkpoint(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"检查点不存在: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise DataError(f"无法读取检查点 {path}: {e}") from e
    if not isinstance(payload, dict) or "version" not in payload:
        raise DataError(f"检查点缺少 version 字段: {path}")
    if payload["version"] != CHECKPOINT_VERSION:
        raise DataError(f"不支持的检查点版本 {payload['version']}: {path}")
    return payload


def load_checkpoint(path, dtype: torch.dtype = torch.float32, device: str = "cpu") -> Tuple[VisSemCom, dict]:
    """读取检查点并重建模型，返回 (model, payload)"""
    payload = read_checkpoint(path)
    model = VisSemCom(CodecConfig(**payload["codec_config"]))
    try:
        model.load_state_dict(payload["state_dict"])
    except RuntimeError as e:
        raise DataError(f"检查点参数与结构不匹配 {path}: {e}") from e
    logger.info(f"✅ 已加载检查点 {path} (iter={payload['iteration']})")
    return model.to(device=device, dtype=dtype), payload


def checkpoint_digest(state_dict: Dict[str, torch.Tensor]) -> str:
    """参数张量的 SHA-256，按参数名排序"""
    h = hashlib.sha256()
    for name in sorted(state_dict):
        tensor = state_dict[name].detach().cpu().contiguous()
        h.update(name.encode())
        h.update(str(tensor.dtype).encode())
        h.update(tensor.numpy().tobytes())
    return h.hexdigest()


def transfer_init(model: VisSemCom, source_state: Dict[str, torch.Tensor]) -> Tuple[int, int]:
    """
    用另一种 STB 组合训练得到的权重初始化 model

    名称和形状都相同的参数直接复制，其余保持新初始化。返回 (复制数, 新初始化数)。
    """
    target = model.state_dict()
    key = "encoder.patch_embed.proj.weight"
    if key in source_state and source_state[key].shape != target[key].shape:
        raise ConfigurationError(
            f"embed_dim 不一致，无法迁移: {tuple(source_state[key].shape)} vs {tuple(target[key].shape)}")

    # qkv/proj 的形状与 head 数无关，只能通过偏置表的列数判断
    for s in range(len(model.encoder.stages)):
        bias_key = f"encoder.stages.{s}.blocks.0.attn.relative_position_bias_table"
        src = source_state.get(bias_key)
        if src is not None and src.shape[1] != target[bias_key].shape[1]:
            raise ConfigurationError(
                f"stage {s + 1} 的 head 数不一致，无法迁移: {src.shape[1]} vs {target[bias_key].shape[1]}")

    copied, fresh = 0, 0
    with torch.no_grad():
        for name, tensor in target.items():
            src = source_state.get(name)
            if src is not None and src.shape == tensor.shape:
                tensor.copy_(src.to(dtype=tensor.dtype))
                copied += 1
            else:
                fresh += 1
    logger.info(f"🔁 权重迁移: 复制 {copied} 个张量, 新初始化 {fresh} 个")
    return copied, fresh
