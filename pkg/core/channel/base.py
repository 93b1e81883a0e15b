"""
信道模型抽象基类
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

import torch

from config.schema import ChannelConfig
from .functional import (
    GeneratorArg,
    check_unit_power,
    complex_normal,
    effective_snr_db,
    row_generators,
    snr_to_noise_var,
)


@dataclass
class ChannelRealization:
    """一次传输的信道实现，逐行（逐图像）对应一个块"""
    h: torch.Tensor          # (B, k) complex
    sigma2: torch.Tensor     # (B,) float64
    shadow_db: torch.Tensor  # (B,) float64，未启用阴影衰落时为 0


class ChannelModel(ABC):
    """信道模型抽象基类：子类只需给出单个块的衰落序列"""

    name: str = ""

    @abstractmethod
    def sample_fading(self, cfg: ChannelConfig, k: int, generator: Optional[torch.Generator] = None,
                      dtype: torch.dtype = torch.complex128, device=None) -> torch.Tensor:
        """返回长度 k 的复增益序列 h"""
        pass

    def noise_var(self, cfg: ChannelConfig) -> float:
        return snr_to_noise_var(effective_snr_db(cfg))

    def transmit(self, x: torch.Tensor, cfg: ChannelConfig, generator: GeneratorArg = None,
                 power_tol: float = 1e-6) -> Tuple[torch.Tensor, ChannelRealization]:
        """
        y = h·x + ρ，x 为 (B, k) 复符号

        每行依次抽取: 衰落 → 阴影 (link_budget) → 噪声，保证逐行随机流与 batch 组成无关。
        """
        if x.dim() == 1:
            y, real = self.transmit(x.unsqueeze(0), cfg, generator, power_tol)
            return y[0], real
        check_unit_power(x, power_tol)
        B, k = x.shape
        generators = row_generators(generator, B)
        base_var = self.noise_var(cfg)

        hs, noises, sigma2, shadow = [], [], [], []
        for g in generators:
            h = self.sample_fading(cfg, k, g, dtype=x.dtype, device=x.device)
            s_db = 0.0
            if cfg.link_budget:
                s_db = float(torch.randn(1, generator=g, dtype=torch.float64) * cfg.shadowing_std_db)
            var = base_var * 10.0 ** (s_db / 10.0)
            hs.append(h)
            noises.append(self.sample_noise(k, var, g, x.dtype, x.device))
            sigma2.append(var)
            shadow.append(s_db)

        h = torch.stack(hs)
        y = h * x + torch.stack(noises)
        realization = ChannelRealization(
            h=h,
            sigma2=torch.tensor(sigma2, dtype=torch.float64),
            shadow_db=torch.tensor(shadow, dtype=torch.float64),
        )
        return y, realization

    def sample_noise(self, k: int, var: float, generator: Optional[torch.Generator],
                     dtype: torch.dtype, device) -> torch.Tensor:
        return complex_normal(k, var, generator, dtype=dtype, device=device)
