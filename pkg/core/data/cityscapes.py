"""
Cityscapes 数据加载

目录结构:
    <root>/leftImg8bit/<split>/<city>/<stem>_leftImg8bit.png
    <root>/gtFine/<split>/<city>/<stem>_gtFine_labelIds.png
"""
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np
from loguru import logger
from PIL import Image

from config.presets import IGNORE_INDEX, LABELID_TO_TRAINID
from config.schema import DatasetSpec
from core.errors import ConfigurationError, DataError

_IMAGE_SUFFIX = "_leftImg8bit.png"
_LABEL_SUFFIX = "_gtFine_labelIds.png"

# labelId -> trainId 查找表
_LUT = np.full(34, IGNORE_INDEX, dtype=np.uint8)
for _label_id, _train_id in LABELID_TO_TRAINID.items():
    _LUT[_label_id] = _train_id


def labelid_to_trainid(raw: np.ndarray) -> np.ndarray:
    """把原始 labelId（0..33）映射为 trainId（0..18 或 255）"""
    raw = np.asarray(raw)
    if raw.size and (raw.min() < 0 or raw.max() > 33):
        raise DataError(f"labelId 超出 0..33 范围: min={raw.min()}, max={raw.max()}")
    return _LUT[raw.astype(np.int64)]


def find_pairs(root: str, split: str) -> List[Tuple[Path, Path]]:
    """列出 (图像, 标签) 路径对，按路径排序"""
    image_dir = Path(root) / "leftImg8bit" / split
    label_dir = Path(root) / "gtFine" / split
    for directory in (image_dir, label_dir):
        if not directory.is_dir():
            raise ConfigurationError(f"Cityscapes 目录不存在: {directory}")

    pairs = []
    for image_path in sorted(image_dir.rglob(f"*{_IMAGE_SUFFIX}")):
        stem = image_path.name[:-len(_IMAGE_SUFFIX)]
        label_path = label_dir / image_path.parent.name / f"{stem}{_LABEL_SUFFIX}"
        if not label_path.is_file():
            raise ConfigurationError(f"缺少标签文件: {label_path}")
        pairs.append((image_path, label_path))

    if not pairs:
        raise ConfigurationError(f"Cityscapes {split} 划分为空: {image_dir}")
    logger.info(f"📂 Cityscapes {split}: {len(pairs)} 对样本")
    return pairs


def read_pair(image_path: Path, label_path: Path) -> Tuple[np.ndarray, np.ndarray]:
    """读取一对样本，图像归一化到 [0, 1]，标签转为 trainId"""
    image = np.asarray(Image.open(image_path).convert("RGB"), dtype=np.float32) / 255.0
    raw = np.asarray(Image.open(label_path))
    if raw.ndim != 2:
        raise DataError(f"标签必须是单通道 PNG: {label_path}")
    if raw.shape != image.shape[:2]:
        raise DataError(f"图像与标签尺寸不一致 {image.shape[:2]} vs {raw.shape}: {label_path.name}")
    try:
        labels = labelid_to_trainid(raw)
    except DataError as e:
        raise DataError(f"{label_path.name}: {e}") from e
    return image, labels


def load_cityscapes(spec: DatasetSpec, split: Optional[str] = None,
                    seed: Optional[int] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """
    按确定顺序逐个产出 (Image, LabelMap)

    seed 不为空时按该种子打乱顺序（同一种子顺序相同）
    """
    pairs = find_pairs(spec.root, split or spec.split)
    order = np.arange(len(pairs))
    if seed is not None:
        order = np.random.default_rng(seed).permutation(len(pairs))
    for i in order:
        yield read_pair(*pairs[i])
