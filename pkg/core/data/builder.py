"""
数据集构建
"""
from typing import Optional

import numpy as np
import torch
from loguru import logger
from torch.utils.data import Dataset

from config.schema import DatasetSpec
from core.data.cityscapes import find_pairs, read_pair
from core.data.synthetic import SyntheticSet, gen_synthetic
from core.data.transforms import augment, pad_to_multiple
from utils import derive_seed


class SegmentationDataset(Dataset):
    """
    统一的分割数据集包装

    返回 (image (3, H, W) float32, labels (H, W) int64, index)。
    训练增强的随机流由 (seed, epoch, index) 派生，多进程加载与单进程结果一致。
    """

    def __init__(self, spec: DatasetSpec, train: bool, seed: int,
                 synthetic: Optional[SyntheticSet] = None, pairs: Optional[list] = None):
        self.spec = spec
        self.train = train
        self.seed = seed
        self.epoch = 0
        self._synthetic = synthetic
        self._pairs = pairs

    def __len__(self):
        if self._synthetic is not None:
            return len(self._synthetic)
        return len(self._pairs)

    def set_epoch(self, epoch: int):
        self.epoch = epoch

    def load(self, idx: int):
        """读取原始 (image, labels)，未增强"""
        if self._synthetic is not None:
            image, labels = self._synthetic[idx]
            return image, labels
        return read_pair(*self._pairs[idx])

    def __getitem__(self, idx: int):
        image, labels = self.load(idx)
        if self.train:
            rng = np.random.default_rng(derive_seed(self.seed, self.epoch, idx))
            image, labels = augment((image, labels), rng, self.spec)
        else:
            image, labels = pad_to_multiple(image, labels, 32)
        image = torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1), dtype=np.float32))
        labels = torch.from_numpy(np.ascontiguousarray(labels, dtype=np.int64))
        return image, labels, idx


def build_dataset(spec: DatasetSpec, train: bool = True, seed: Optional[int] = None) -> SegmentationDataset:
    """按 spec.kind 构建训练或评测数据集"""
    seed = spec.seed if seed is None else seed
    seed = 0 if seed is None else seed
    if spec.kind == "synthetic":
        h, w = spec.image_size
        n_images = spec.n_images if train else spec.n_eval_images
        # 评测集使用独立的生成种子
        data = gen_synthetic(n_images, h, w, spec.n_cls, derive_seed(seed, 0 if train else 1))
        logger.info(f"🧪 合成数据集: {n_images} 张 {h}x{w}, {spec.n_cls} 类 ({'train' if train else 'eval'})")
        return SegmentationDataset(spec, train, seed, synthetic=data)

    split = spec.split if train else spec.eval_split
    pairs = find_pairs(spec.root, split)
    return SegmentationDataset(spec, train, seed, pairs=pairs)
