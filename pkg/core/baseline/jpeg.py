"""
JPEG 信源编码
"""
from io import BytesIO
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from PIL import Image

from core.errors import ConfigurationError


def _to_pil(img: np.ndarray) -> Image.Image:
    return Image.fromarray(np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8))


def jpeg_encode(img: np.ndarray, quality: int) -> bytes:
    """img: (H, W, 3) float [0, 1]"""
    if not 1 <= quality <= 100:
        raise ConfigurationError(f"JPEG 质量必须在 [1, 100] 内: {quality}")
    buf = BytesIO()
    _to_pil(img).save(buf, format="JPEG", quality=int(quality))
    return buf.getvalue()


def jpeg_decode(data: bytes, expected_size: Optional[Tuple[int, int]] = None) -> Optional[np.ndarray]:
    """解码失败或尺寸不符时返回 None"""
    try:
        with Image.open(BytesIO(data)) as im:
            im.load()
            rgb = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    except Exception as e:
        logger.debug(f"JPEG 解码失败: {e}")
        return None
    if expected_size is not None and rgb.shape[:2] != tuple(expected_size):
        return None
    return rgb


def jpeg_round(img: np.ndarray, quality: int) -> Tuple[bytes, np.ndarray]:
    """编码再解码，返回 (字节流, 重建图像)"""
    data = jpeg_encode(img, quality)
    return data, jpeg_decode(data)


def raw_size(img: np.ndarray) -> int:
    """未压缩 8-bit RGB 字节数"""
    h, w = img.shape[:2]
    return h * w * 3


def search_jpeg_quality(img: np.ndarray, target_r: float) -> Tuple[int, bytes, float]:
    """
    二分搜索不超过字节预算 raw/target_r 的最高质量

    返回 (quality, 字节流, 实际 R)。质量为 1 仍超预算时取 1 并告警。
    """
    if target_r <= 0:
        raise ConfigurationError(f"目标压缩率必须为正: {target_r}")
    budget = raw_size(img) / target_r
    lo, hi = 1, 100
    best_q, best = 1, None
    while lo <= hi:
        q = (lo + hi) // 2
        data = jpeg_encode(img, q)
        if len(data) <= budget:
            best_q, best = q, data
            lo = q + 1
        else:
            hi = q - 1
    if best is None:
        best = jpeg_encode(img, 1)
        logger.warning(f"⚠️ JPEG 质量 1 仍超出预算 ({len(best)} > {budget:.0f} 字节), R 达不到 {target_r}")
    return best_q, best, raw_size(img) / len(best)
