"""
数据模块 - Cityscapes / 合成数据集、增强与类别权重
"""
from .builder import SegmentationDataset, build_dataset
from .cityscapes import find_pairs, labelid_to_trainid, load_cityscapes, read_pair
from .class_weights import ClassWeights, class_weights, default_class_weights
from .synthetic import SyntheticSet, gen_synthetic
from .transforms import augment, hflip, pad_to_multiple, photometric_distortion, random_crop

__all__ = [
    'SegmentationDataset',
    'build_dataset',
    'find_pairs',
    'labelid_to_trainid',
    'load_cityscapes',
    'read_pair',
    'ClassWeights',
    'class_weights',
    'default_class_weights',
    'SyntheticSet',
    'gen_synthetic',
    'augment',
    'hflip',
    'pad_to_multiple',
    'photometric_distortion',
    'random_crop',
]
