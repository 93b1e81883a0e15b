"""
压缩特征 <-> 复数信道符号

展平顺序为行优先（先空间 h、w，后通道 K），相邻两个实数组成 (实部, 虚部)。
每个块（每张图像）按平均符号功率归一化，缩放系数随符号一起保存以便逆变换。
"""
from dataclasses import dataclass
from typing import Tuple

import torch

from core.errors import DataError


@dataclass
class TxSymbols:
    symbols: torch.Tensor      # (B, k) complex，每行 E|x|² = 1
    scale: torch.Tensor        # (B,) 实数，全零块为 1
    shape: Tuple[int, int, int]  # 压缩特征的 (K, h, w)
    padded: bool               # 实数个数为奇数时补了一个 0

    @property
    def k(self) -> int:
        return self.symbols.shape[-1]


def to_symbols(f: torch.Tensor) -> TxSymbols:
    """f: (B, K, h, w) -> 每张图像 H·W·K/512 个单位功率复符号"""
    B, K, h, w = f.shape
    flat = f.permute(0, 2, 3, 1).reshape(B, -1)
    padded = flat.shape[1] % 2 == 1
    if padded:
        flat = torch.cat([flat, flat.new_zeros(B, 1)], dim=1)
    z = torch.view_as_complex(flat.reshape(B, -1, 2).contiguous())

    power = (z.real ** 2 + z.imag ** 2).mean(dim=1)
    scale = torch.where(power > 0, power.clamp_min(torch.finfo(power.dtype).tiny).sqrt(), torch.ones_like(power))
    return TxSymbols(symbols=z / scale.unsqueeze(1), scale=scale, shape=(K, h, w), padded=padded)


def from_symbols(y: torch.Tensor, tx: TxSymbols) -> torch.Tensor:
    """to_symbols 的逆变换，y: (B, k) complex -> (B, K, h, w)"""
    K, h, w = tx.shape
    n_real = K * h * w
    expected = (n_real + 1) // 2
    if y.dim() != 2 or y.shape[1] != expected:
        raise DataError(f"符号长度 {tuple(y.shape)} 与特征形状 {(K, h, w)} 不匹配，期望每行 {expected} 个")
    z = y * tx.scale.to(y.real.dtype).unsqueeze(1)
    flat = torch.view_as_real(z.contiguous()).reshape(y.shape[0], -1)[:, :n_real]
    return flat.reshape(-1, h, w, K).permute(0, 3, 1, 2).contiguous()
