"""
数据增强

图像为 (H, W, 3) float32，取值 [0, 1]；标签为 (H, W) 整型，255 为 ignore。
"""
from typing import Tuple

import numpy as np
from matplotlib.colors import hsv_to_rgb, rgb_to_hsv

from config.presets import IGNORE_INDEX
from config.schema import DatasetSpec
from core.errors import ConfigurationError

Pair = Tuple[np.ndarray, np.ndarray]


def random_crop(image: np.ndarray, labels: np.ndarray, crop_size: Tuple[int, int],
                rng: np.random.Generator) -> Pair:
    """图像与标签使用同一偏移裁剪"""
    h_c, w_c = crop_size
    H, W = labels.shape
    if h_c > H or w_c > W:
        raise ConfigurationError(f"裁剪尺寸 {crop_size} 大于图像尺寸 {(H, W)}")
    top = int(rng.integers(0, H - h_c + 1))
    left = int(rng.integers(0, W - w_c + 1))
    return (image[top:top + h_c, left:left + w_c].copy(),
            labels[top:top + h_c, left:left + w_c].copy())


def hflip(array: np.ndarray) -> np.ndarray:
    """水平翻转，同时适用于 (H, W, 3) 与 (H, W)"""
    return array[:, ::-1].copy()


def photometric_distortion(image: np.ndarray, rng: np.random.Generator,
                           brightness_delta: float = 32.0,
                           contrast_range: Tuple[float, float] = (0.5, 1.5),
                           saturation_range: Tuple[float, float] = (0.5, 1.5),
                           hue_delta: float = 18.0) -> np.ndarray:
    """亮度 / 对比度 / 饱和度 / 色相抖动，每项以 0.5 概率生效，只作用于图像"""
    img = image.astype(np.float32).copy()

    if rng.random() < 0.5:
        img += rng.uniform(-brightness_delta, brightness_delta) / 255.0

    # 对比度放在 HSV 调整之前或之后
    contrast_first = rng.random() < 0.5
    if contrast_first and rng.random() < 0.5:
        img *= rng.uniform(*contrast_range)

    hsv = rgb_to_hsv(np.clip(img, 0.0, 1.0))
    if rng.random() < 0.5:
        hsv[..., 1] = np.clip(hsv[..., 1] * rng.uniform(*saturation_range), 0.0, 1.0)
    if rng.random() < 0.5:
        hsv[..., 0] = np.mod(hsv[..., 0] + rng.uniform(-hue_delta, hue_delta) / 360.0, 1.0)
    img = hsv_to_rgb(hsv).astype(np.float32)

    if not contrast_first and rng.random() < 0.5:
        img *= rng.uniform(*contrast_range)

    return np.clip(img, 0.0, 1.0)


def pad_to_multiple(image: np.ndarray, labels: np.ndarray, multiple: int = 32) -> Pair:
    """图像反射填充、标签以 ignore 填充到 multiple 的整数倍"""
    H, W = labels.shape
    pad_h = (-H) % multiple
    pad_w = (-W) % multiple
    if pad_h == 0 and pad_w == 0:
        return image, labels
    mode = "reflect" if pad_h < H and pad_w < W else "edge"
    image = np.pad(image, ((0, pad_h), (0, pad_w), (0, 0)), mode=mode)
    labels = np.pad(labels, ((0, pad_h), (0, pad_w)), mode="constant", constant_values=IGNORE_INDEX)
    return image, labels


def augment(pair: Pair, rng: np.random.Generator, spec: DatasetSpec) -> Pair:
    """训练增强：随机裁剪 -> 随机水平翻转 -> 光度扰动"""
    image, labels = pair
    if image.shape[:2] != labels.shape:
        raise ConfigurationError(f"图像 {image.shape[:2]} 与标签 {labels.shape} 尺寸不一致")
    if spec.random_crop:
        image, labels = random_crop(image, labels, spec.crop_size, rng)
    if spec.hflip and rng.random() < 0.5:
        image, labels = hflip(image), hflip(labels)
    if spec.photometric:
        image = photometric_distortion(
            image, rng,
            brightness_delta=spec.brightness_delta,
            contrast_range=spec.contrast_range,
            saturation_range=spec.saturation_range,
            hue_delta=spec.hue_delta,
        )
    return pad_to_multiple(image, labels, 32)
