"""
配置模块
"""
from .schema import (
    AblationConfig,
    BaselineConfig,
    ChannelConfig,
    CodecConfig,
    DatasetSpec,
    EvalConfig,
    LossConfig,
    OhemConfig,
    RunConfig,
    TrainConfig,
)

__all__ = [
    'AblationConfig',
    'BaselineConfig',
    'ChannelConfig',
    'CodecConfig',
    'DatasetSpec',
    'EvalConfig',
    'LossConfig',
    'OhemConfig',
    'RunConfig',
    'TrainConfig',
]
