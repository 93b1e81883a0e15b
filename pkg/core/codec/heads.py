"""
特征聚合器、语义特征解码器、重建器与训练期辅助 FCN 头
"""
import torch
import torch.nn as nn
import torch.nn.functional as F

from core.errors import UsageError
from .swin import FeaturePyramid


class LayerNorm2d(nn.Module):
    """channels-first 特征图上按通道做 LayerNorm"""

    def __init__(self, channels: int, eps: float = 1e-5):
        super().__init__()
        self.norm = nn.LayerNorm(channels, eps=eps)

    def forward(self, x):
        return self.norm(x.permute(0, 2, 3, 1)).permute(0, 3, 1, 2)


class FeatureAggregator(nn.Module):
    """
    F1、F2、F4 双线性重采样到 F3 尺寸，通道拼接为 15C，再经 K 个 1×1 卷积压缩
    """

    def __init__(self, embed_dim: int, k_channels: int, activation: bool = False):
        super().__init__()
        self.in_channels = 15 * embed_dim
        self.proj = nn.Conv2d(self.in_channels, k_channels, kernel_size=1)
        self.act = nn.GELU() if activation else nn.Identity()

    def forward(self, p: FeaturePyramid) -> torch.Tensor:
        size = p.f3.shape[-2:]
        resampled = [
            F.interpolate(f, size=size, mode="bilinear", align_corners=False) if f.shape[-2:] != size else f
            for f in p
        ]
        return self.act(self.proj(torch.cat(resampled, dim=1)))


class SemanticFeatureDecoder(nn.Module):
    """三层 K→K 的 1×1 卷积，层间 LayerNorm + GELU，用于抑制信道噪声"""

    def __init__(self, k_channels: int):
        super().__init__()
        self.layers = nn.Sequential(
            nn.Conv2d(k_channels, k_channels, 1),
            LayerNorm2d(k_channels),
            nn.GELU(),
            nn.Conv2d(k_channels, k_channels, 1),
            LayerNorm2d(k_channels),
            nn.GELU(),
            nn.Conv2d(k_channels, k_channels, 1),
        )

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        return self.layers(f)


class Reconstructor(nn.Module):
    """上采样 ×2 → conv(K) → 上采样 ×2 → conv(N_cls) → 上采样 ×4"""

    def __init__(self, k_channels: int, n_cls: int):
        super().__init__()
        self.conv1 = nn.Conv2d(k_channels, k_channels, 1)
        self.norm1 = LayerNorm2d(k_channels)
        self.act = nn.GELU()
        self.conv2 = nn.Conv2d(k_channels, n_cls, 1)

    @staticmethod
    def _up(x, factor):
        return F.interpolate(x, scale_factor=factor, mode="bilinear", align_corners=False)

    def forward(self, f: torch.Tensor) -> torch.Tensor:
        x = self._up(f, 2)
        x = self.act(self.norm1(self.conv1(x)))
        x = self._up(x, 2)
        x = self.conv2(x)
        return self._up(x, 4)

    @staticmethod
    def predict(logits: torch.Tensor):
        """softmax 概率与 argmax 标签图"""
        probs = logits.softmax(dim=1)
        return probs, probs.argmax(dim=1)


class AuxFCNHead(nn.Module):
    """F3 上的转置卷积辅助头（×16），只在训练时使用"""

    def __init__(self, in_channels: int, mid_channels: int, n_cls: int):
        super().__init__()
        self.up1 = nn.ConvTranspose2d(in_channels, mid_channels, kernel_size=4, stride=4)
        self.norm = LayerNorm2d(mid_channels)
        self.act = nn.GELU()
        self.up2 = nn.ConvTranspose2d(mid_channels, n_cls, kernel_size=4, stride=4)

    def forward(self, f3: torch.Tensor) -> torch.Tensor:
        if not self.training:
            raise UsageError("辅助解码头只在训练模式下可用")
        return self.up2(self.act(self.norm(self.up1(f3))))
