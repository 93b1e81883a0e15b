"""
类别权重

w_i = 类别平衡系数 × 注意力系数，注意力系数取 1.0 或 1.5。
"""
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from config.presets import (
    ATTENTION_DEFAULT,
    ATTENTION_IMPORTANT,
    CITYSCAPES_CLASSES,
    IMPORTANT_CLASS_WEIGHTS,
)
from core.errors import ConfigurationError


@dataclass(frozen=True)
class ClassWeights:
    w: np.ndarray           # (N_cls,) float64, 全部为正
    important: np.ndarray   # (N_cls,) bool

    @property
    def important_ids(self) -> list:
        return [int(i) for i in np.flatnonzero(self.important)]


def class_weights(balance: Sequence[float], important: Sequence[bool]) -> ClassWeights:
    """由平衡系数与重要性标记计算最终权重"""
    balance = np.asarray(balance, dtype=np.float64)
    important = np.asarray(important, dtype=bool)
    if balance.shape != important.shape or balance.ndim != 1:
        raise ConfigurationError(f"balance {balance.shape} 与 important {important.shape} 长度不一致")
    if np.any(balance <= 0):
        raise ConfigurationError(f"类别平衡系数必须为正: {balance.tolist()}")
    attention = np.where(important, ATTENTION_IMPORTANT, ATTENTION_DEFAULT)
    return ClassWeights(w=balance * attention, important=important)


def default_class_weights(class_names: Sequence[str],
                          important_names: Optional[Sequence[str]] = None,
                          balance_overrides: Optional[Dict[str, float]] = None) -> ClassWeights:
    """
    默认权重

    Cityscapes 类别: 权重表中的 12 个重要类别平衡系数 = w / 1.5，其余为 1.0。
    合成数据集: 默认只有最后一个稀有类别为重要类别。
    """
    names = list(class_names)
    if important_names is None or len(important_names) == 0:
        if names == CITYSCAPES_CLASSES:
            important_names = list(IMPORTANT_CLASS_WEIGHTS)
        else:
            important_names = [names[-1]]

    unknown = [n for n in important_names if n not in names]
    if unknown:
        raise ConfigurationError(f"未知重要类别: {unknown}")

    balance = []
    for name in names:
        if name in IMPORTANT_CLASS_WEIGHTS and names == CITYSCAPES_CLASSES:
            balance.append(IMPORTANT_CLASS_WEIGHTS[name] / ATTENTION_IMPORTANT)
        else:
            balance.append(1.0)
    for name, value in (balance_overrides or {}).items():
        if name not in names:
            raise ConfigurationError(f"未知类别: {name}")
        balance[names.index(name)] = value

    important = [name in important_names for name in names]
    return class_weights(balance, important)
