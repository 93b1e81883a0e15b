"""
时变 Rayleigh 块衰落信道

h_n = γ·exp(j2π f_d n / R_s)，γ ~ CN(0, 1) 每个块（每张图像）抽取一次，
R_s 取信道带宽。
"""
import math

import torch

from ..base import ChannelModel
from ..functional import complex_normal, doppler_shift


class RayleighDopplerChannel(ChannelModel):
    name = "rayleigh_doppler"

    def sample_fading(self, cfg, k, generator=None, dtype=torch.complex128, device=None):
        gamma = complex_normal(1, 1.0, generator, dtype=torch.complex128, device=device)[0]
        f_d = doppler_shift(cfg.carrier_hz, cfg.velocity_mps)
        n = torch.arange(k, dtype=torch.float64, device=device)
        phase = (2.0 * math.pi * f_d / cfg.bandwidth_hz) * n
        h = gamma * torch.polar(torch.ones_like(phase), phase)
        return h.to(dtype)
