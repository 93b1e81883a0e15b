"""
信道管理器 - 按 channel.mode 分发到对应的信道模型
"""
from typing import Dict, Optional

import torch
from loguru import logger

from config.schema import ChannelConfig
from core.errors import ConfigurationError
from .base import ChannelModel
from .functional import GeneratorArg
from .providers import AwgnChannel, IdentityChannel, RayleighDopplerChannel


class ChannelManager:
    """信道模型注册表"""

    def __init__(self, auto_configure: bool = True):
        self.providers: Dict[str, ChannelModel] = {}
        if auto_configure:
            for provider in (IdentityChannel(), AwgnChannel(), RayleighDopplerChannel()):
                self.register_provider(provider.name, provider)

    def register_provider(self, name: str, provider: ChannelModel):
        if name in self.providers:
            logger.warning(f"⚠️ 信道模型 {name} 被覆盖")
        self.providers[name] = provider

    def get_provider(self, name: str) -> ChannelModel:
        if name not in self.providers:
            raise ConfigurationError(f"信道模型 '{name}' 未注册，可用: {list(self.providers.keys())}")
        return self.providers[name]


_global_channel_manager: Optional[ChannelManager] = None


def get_channel_manager() -> ChannelManager:
    """获取全局信道管理器实例"""
    global _global_channel_manager
    if _global_channel_manager is None:
        _global_channel_manager = ChannelManager()
    return _global_channel_manager


def sample_fading(cfg: ChannelConfig, k: int, generator: Optional[torch.Generator] = None,
                  dtype: torch.dtype = torch.complex128) -> torch.Tensor:
    """单个块的复增益序列"""
    if k < 1:
        raise ConfigurationError(f"块长度必须 >= 1: {k}")
    return get_channel_manager().get_provider(cfg.mode).sample_fading(cfg, k, generator, dtype=dtype)


def transmit(x: torch.Tensor, cfg: ChannelConfig, generator: GeneratorArg = None, power_tol: float = 1e-6):
    """按 cfg.mode 选择信道模型并传输，返回 (y, ChannelRealization)"""
    return get_channel_manager().get_provider(cfg.mode).transmit(x, cfg, generator, power_tol)
