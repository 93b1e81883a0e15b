"""
合成分割数据集

桌面规模的 Cityscapes 替身：彩色几何形状 + 精确栅格化标签。
类别 0 为背景，1..n_cls-2 依次为矩形 / 椭圆 / 三角形 / 菱形（循环），
最后一个类别为稀有小目标（小圆点），用于检验难例挖掘与重要性加权。
"""
from dataclasses import dataclass

import numpy as np
from matplotlib.colors import hsv_to_rgb

from core.errors import ConfigurationError

_SHAPE_KINDS = ("rectangle", "ellipse", "triangle", "diamond")


@dataclass
class SyntheticSet:
    """images: (n, h, w, 3) float32；labels: (n, h, w) uint8"""
    images: np.ndarray
    labels: np.ndarray
    n_cls: int

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, idx):
        return self.images[idx], self.labels[idx]

    @property
    def rare_class(self) -> int:
        return self.n_cls - 1


def class_palette(n_cls: int) -> np.ndarray:
    """每个前景类别一个固定色相，背景为暗灰"""
    colors = np.zeros((n_cls, 3), dtype=np.float32)
    colors[0] = (0.25, 0.25, 0.28)
    for i in range(1, n_cls):
        colors[i] = hsv_to_rgb(np.array([(i - 1) / max(n_cls - 1, 1), 0.85, 0.95]))
    return colors


def _shape_mask(kind: str, yy: np.ndarray, xx: np.ndarray, cy: float, cx: float,
                ry: float, rx: float) -> np.ndarray:
    dy = (yy - cy) / ry
    dx = (xx - cx) / rx
    if kind == "rectangle":
        return (np.abs(dy) <= 1) & (np.abs(dx) <= 1)
    if kind == "ellipse":
        return dy ** 2 + dx ** 2 <= 1
    if kind == "triangle":
        # 顶点朝上，底边在 cy + ry
        return (dy >= -1) & (dy <= 1) & (np.abs(dx) <= (dy + 1) / 2)
    if kind == "diamond":
        return np.abs(dy) + np.abs(dx) <= 1
    raise ValueError(f"未知形状: {kind}")


def gen_synthetic(n_images: int, h: int, w: int, n_cls: int, seed: int) -> SyntheticSet:
    """生成 n_images 张 h×w 图像及其标签，同一 seed 结果逐位相同"""
    if h % 32 or w % 32 or h <= 0 or w <= 0:
        raise ConfigurationError(f"合成图像尺寸 ({h}, {w}) 必须为 32 的整数倍")
    if n_cls < 2:
        raise ConfigurationError("n_cls 至少为 2")

    rng = np.random.default_rng(seed)
    palette = class_palette(n_cls)
    scale = min(h, w) / 64.0
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float32)

    images = np.empty((n_images, h, w, 3), dtype=np.float32)
    labels = np.zeros((n_images, h, w), dtype=np.uint8)

    for n in range(n_images):
        # 背景：底色 + 线性渐变
        gy, gx = rng.uniform(-0.1, 0.1, size=2)
        shade = (gy * (yy / h - 0.5) + gx * (xx / w - 0.5))[..., None]
        image = np.broadcast_to(palette[0], (h, w, 3)) + shade
        label = np.zeros((h, w), dtype=np.uint8)

        # 常规形状类别
        for cls in range(1, n_cls - 1):
            kind = _SHAPE_KINDS[(cls - 1) % len(_SHAPE_KINDS)]
            for _ in range(int(rng.integers(0, 3))):
                ry = rng.uniform(5, 14) * scale
                rx = rng.uniform(5, 14) * scale
                cy = rng.uniform(0, h)
                cx = rng.uniform(0, w)
                mask = _shape_mask(kind, yy, xx, cy, cx, ry, rx)
                color = np.clip(palette[cls] + rng.normal(0, 0.04, size=3), 0, 1)
                image = np.where(mask[..., None], color, image)
                label[mask] = cls

        # 稀有小目标最后绘制，保证可见
        if n_cls >= 2 and rng.random() < 0.7:
            r = rng.uniform(1.8, 3.0) * scale
            cy = rng.uniform(r, h - r)
            cx = rng.uniform(r, w - r)
            mask = _shape_mask("ellipse", yy, xx, cy, cx, r, r)
            color = np.clip(palette[n_cls - 1] + rng.normal(0, 0.04, size=3), 0, 1)
            image = np.where(mask[..., None], color, image)
            label[mask] = n_cls - 1

        image = image + rng.normal(0, 0.02, size=image.shape)
        images[n] = np.clip(image, 0.0, 1.0)
        labels[n] = label

    return SyntheticSet(images=images, labels=labels, n_cls=n_cls)
