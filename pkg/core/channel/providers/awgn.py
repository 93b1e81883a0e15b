"""
加性高斯白噪声信道
"""
import torch

from ..base import ChannelModel


class AwgnChannel(ChannelModel):
    name = "awgn"

    def sample_fading(self, cfg, k, generator=None, dtype=torch.complex128, device=None):
        return torch.ones(k, dtype=dtype, device=device)
