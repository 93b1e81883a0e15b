import hashlib
import random
from typing import List

import numpy as np
import torch

from config.settings import DETERMINISTIC


def seed_everything(seed: int, deterministic: bool = DETERMINISTIC):
    """设置 python / numpy / torch 的全局随机种子"""
    random.seed(seed)
    np.random.seed(seed % (2 ** 32))
    torch.manual_seed(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True, warn_only=True)


def derive_seed(*parts: int) -> int:
    """由多个整数派生一个独立的 63 位种子（SeedSequence 保证流之间互不相关）"""
    seq = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts])
    return int(seq.generate_state(1, dtype=np.uint64)[0]) & ((1 << 63) - 1)


def short_hash(text: str, length: int = 8) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:length]


def parse_float_list(text: str) -> List[float]:
    """'1,4,7' -> [1.0, 4.0, 7.0]"""
    if not text:
        return []
    items = [t.strip() for t in text.split(',')]
    return [float(t) for t in items if t]
