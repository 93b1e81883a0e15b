"""
信道模型实现
"""
from .awgn import AwgnChannel
from .identity import IdentityChannel
from .rayleigh import RayleighDopplerChannel

__all__ = [
    'AwgnChannel',
    'IdentityChannel',
    'RayleighDopplerChannel',
]
