"""
语义编解码器模块
"""
from .checkpoint import (
    CHECKPOINT_VERSION,
    checkpoint_digest,
    load_checkpoint,
    read_checkpoint,
    restore_rng_state,
    save_checkpoint,
    transfer_init,
)
from .heads import AuxFCNHead, FeatureAggregator, LayerNorm2d, Reconstructor, SemanticFeatureDecoder
from .model import CodecOutput, VisSemCom, build_model
from .swin import (
    FeaturePyramid,
    PatchEmbed,
    PatchMerging,
    SwinBlock,
    SwinEncoder,
    SwinStage,
    WindowAttention,
    relative_position_index,
    stb_pair,
    window_partition,
    window_reverse,
)
from .symbols import TxSymbols, from_symbols, to_symbols

__all__ = [
    'CHECKPOINT_VERSION',
    'checkpoint_digest',
    'load_checkpoint',
    'read_checkpoint',
    'restore_rng_state',
    'save_checkpoint',
    'transfer_init',
    'AuxFCNHead',
    'FeatureAggregator',
    'LayerNorm2d',
    'Reconstructor',
    'SemanticFeatureDecoder',
    'CodecOutput',
    'VisSemCom',
    'build_model',
    'FeaturePyramid',
    'PatchEmbed',
    'PatchMerging',
    'SwinBlock',
    'SwinEncoder',
    'SwinStage',
    'WindowAttention',
    'relative_position_index',
    'stb_pair',
    'window_partition',
    'window_reverse',
    'TxSymbols',
    'from_symbols',
    'to_symbols',
]
