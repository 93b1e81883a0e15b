"""
信道模块 - 统一导出信道模型与公共函数
"""
from .base import ChannelModel, ChannelRealization
from .functional import (
    ERASURE_THRESHOLD,
    Equalized,
    block_generator,
    check_unit_power,
    complex_normal,
    doppler_shift,
    effective_snr_db,
    equalize,
    snr_to_noise_var,
)
from .manager import ChannelManager, get_channel_manager, sample_fading, transmit
from .providers import AwgnChannel, IdentityChannel, RayleighDopplerChannel

__all__ = [
    # 基类
    'ChannelModel',
    'ChannelRealization',

    # 管理器
    'ChannelManager',
    'get_channel_manager',
    'sample_fading',
    'transmit',

    # 公共函数
    'ERASURE_THRESHOLD',
    'Equalized',
    'block_generator',
    'check_unit_power',
    'complex_normal',
    'doppler_shift',
    'effective_snr_db',
    'equalize',
    'snr_to_noise_var',

    # 信道模型
    'AwgnChannel',
    'IdentityChannel',
    'RayleighDopplerChannel',
]
