"""
理想信道：h = 1，σ² = 0
"""
import torch

from ..base import ChannelModel


class IdentityChannel(ChannelModel):
    name = "identity"

    def sample_fading(self, cfg, k, generator=None, dtype=torch.complex128, device=None):
        return torch.ones(k, dtype=dtype, device=device)

    def noise_var(self, cfg) -> float:
        return 0.0

    def sample_noise(self, k, var, generator, dtype, device):
        return torch.zeros(k, dtype=dtype, device=device)
