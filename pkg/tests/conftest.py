"""
共享测试夹具
"""
import pytest
import torch
from loguru import logger

from config.schema import CodecConfig, RunConfig


@pytest.fixture
def toy_codec() -> CodecConfig:
    """最小可用的编解码器：64x64 输入，K=8，4 类"""
    return CodecConfig.toy(k_channels=8, n_cls=4)


@pytest.fixture
def toy_cfg(tmp_path) -> RunConfig:
    """几步即可跑完的完整运行配置"""
    return RunConfig.model_validate({
        "seed": 3,
        "data": {"kind": "synthetic", "n_cls": 4, "image_size": [64, 64], "crop_size": [64, 64],
                 "n_images": 8, "n_eval_images": 4},
        "codec": {"k_channels": 8},
        "train": {"iterations": 3, "batch_size": 2, "lr": 1e-3, "log_every": 1, "checkpoint_every": 2},
        "eval": {"snr_grid": [5.0, 15.0], "batch_size": 2},
        "ablation": {"iterations": 1},
    })


@pytest.fixture
def float64():
    """在测试内把默认浮点类型切换为 float64"""
    previous = torch.get_default_dtype()
    torch.set_default_dtype(torch.float64)
    yield torch.float64
    torch.set_default_dtype(previous)


@pytest.fixture
def run_dir(tmp_path):
    path = tmp_path / "runs"
    path.mkdir()
    return path


@pytest.fixture
def log_messages():
    """收集 loguru 日志文本"""
    messages = []
    handler_id = logger.add(lambda m: messages.append(str(m)), level="DEBUG")
    yield messages
    logger.remove(handler_id)
