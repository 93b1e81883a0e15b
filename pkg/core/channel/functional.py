"""
信道公共计算：多普勒频移、SNR 换算、随机流、功率检查与均衡
"""
import math
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np
import torch

from config.schema import ChannelConfig
from config.settings import SPEED_OF_LIGHT
from core.errors import ContractViolationError, UsageError
from utils import derive_seed

GeneratorArg = Union[None, torch.Generator, Sequence[Optional[torch.Generator]]]

# 低于该幅度的信道增益视为深衰落，符号按擦除处理
ERASURE_THRESHOLD = 1e-12


def doppler_shift(carrier_hz: float, velocity_mps: float) -> float:
    """最大多普勒频移 f_d = f_c·v/c"""
    if velocity_mps < 0:
        raise ValueError(f"速度不能为负: {velocity_mps}")
    return carrier_hz * velocity_mps / SPEED_OF_LIGHT


def snr_to_noise_var(snr_db: float) -> float:
    """单位平均功率符号下的噪声方差 σ² = 10^(-SNR/10)"""
    return 10.0 ** (-snr_db / 10.0)


def effective_snr_db(cfg: ChannelConfig) -> float:
    """
    实际使用的 SNR

    link_budget 关闭时直接取 snr_db；开启时由发射功率、路径损耗与热噪声底计算。
    """
    if not cfg.link_budget:
        return cfg.snr_db
    noise_floor_dbm = -174.0 + 10.0 * math.log10(cfg.bandwidth_hz) + cfg.noise_figure_db
    return cfg.tx_power_dbm - cfg.path_loss_db - noise_floor_dbm


def block_generator(seed: int, *indices: int, device: str = "cpu") -> torch.Generator:
    """由 (seed, indices...) 派生独立的 torch 随机流"""
    g = torch.Generator(device=device)
    g.manual_seed(derive_seed(seed, *indices))
    return g


def row_generators(generator: GeneratorArg, batch: int) -> List[Optional[torch.Generator]]:
    """把单个 generator 或逐行 generator 列表展开成长度为 batch 的列表"""
    if generator is None or isinstance(generator, torch.Generator):
        return [generator] * batch
    generators = list(generator)
    if len(generators) != batch:
        raise UsageError(f"generator 数量 {len(generators)} 与 batch {batch} 不一致")
    return generators


def complex_normal(n: int, var: float, generator: Optional[torch.Generator],
                   dtype: torch.dtype = torch.complex128, device=None) -> torch.Tensor:
    """CN(0, var)：实部、虚部各 N(0, var/2)"""
    real_dtype = torch.float64 if dtype == torch.complex128 else torch.float32
    parts = torch.randn(n, 2, generator=generator, dtype=real_dtype, device=device)
    parts = parts * math.sqrt(var / 2.0)
    return torch.complex(parts[:, 0], parts[:, 1])


def check_unit_power(x: torch.Tensor, tol: float = 1e-6):
    """每个块的平均符号功率必须为 1"""
    x = x.detach().to(torch.complex128)
    power = (x.real ** 2 + x.imag ** 2).mean(dim=-1)
    worst = (power - 1.0).abs().max().item()
    if not np.isfinite(worst) or worst > tol:
        raise ContractViolationError(f"信道输入未做功率归一化: max |E|x|²-1| = {worst:.3e} > {tol:.1e}")


class Equalized(NamedTuple):
    symbols: torch.Tensor   # (B, k) complex
    erased: torch.Tensor    # (B, k) bool


def equalize(y: torch.Tensor, h: torch.Tensor, mode: str = "zf") -> Equalized:
    """
    接收端均衡（完美 CSI）

    zf: ŷ = y·h*/|h|²，|h| < 1e-12 的符号置零并标记为擦除；raw: 原样返回。
    """
    if mode == "raw":
        return Equalized(y, torch.zeros(y.shape, dtype=torch.bool, device=y.device))
    if mode != "zf":
        raise ValueError(f"未知均衡方式: {mode}")
    mag2 = h.real ** 2 + h.imag ** 2
    erased = mag2.sqrt() < ERASURE_THRESHOLD
    safe = torch.where(erased, torch.ones_like(mag2), mag2)
    y_eq = y * h.conj() / safe
    y_eq = torch.where(erased, torch.zeros_like(y_eq), y_eq)
    return Equalized(y_eq, erased)
