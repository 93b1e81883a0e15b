"""
消融变体注册表

每个消融轴对应一组变体，变体把基础 RunConfig 改写成待训练的配置
"""
from dataclasses import dataclass
from typing import Any, Dict, List

from loguru import logger

from config.loader import set_dotted
from config.presets import STB_COMBINATIONS
from config.schema import RunConfig
from core.errors import ConfigurationError


@dataclass(frozen=True)
class Variant:
    name: str
    overrides: Dict[str, Any]

    def apply(self, cfg: RunConfig) -> RunConfig:
        raw = cfg.model_dump(mode="json")
        for key, value in self.overrides.items():
            set_dotted(raw, key, value)
        return RunConfig.model_validate(raw)


class AblationRegistry:
    """消融轴注册表"""

    def __init__(self):
        self.axes: Dict[str, List[Variant]] = {}
        self._initialized = False

    def _initialize_axes(self):
        """延迟初始化内置消融轴"""
        if self._initialized:
            return
        self.axes["stb_combo"] = [
            Variant(name, {"codec.depths": list(depths)}) for name, depths in STB_COMBINATIONS.items()
        ]
        self.axes["loss"] = [
            Variant("traditional_ce", {"loss.use_weights": False, "loss.use_iou": False,
                                       "loss.ohem.enabled": False}),
            Variant("importance_aware", {"loss.use_weights": True, "loss.use_iou": True,
                                         "loss.ohem.enabled": True}),
        ]
        self.axes["ohem"] = [
            Variant("without_ohem", {"loss.ohem.enabled": False}),
            Variant("with_ohem", {"loss.ohem.enabled": True}),
        ]
        self._initialized = True
        logger.debug(f"🎯 消融轴初始化完成: {list(self.axes)}")

    def get_variants(self, axis: str) -> List[Variant]:
        if not self._initialized:
            self._initialize_axes()
        if axis not in self.axes:
            raise ConfigurationError(f"未知消融轴 '{axis}'，可用: {list(self.axes)}")
        return list(self.axes[axis])

    def register_axis(self, axis: str, variants: List[Variant]):
        """动态注册新的消融轴"""
        if not self._initialized:
            self._initialize_axes()
        self.axes[axis] = list(variants)
        logger.info(f"✅ 注册消融轴: {axis} ({len(variants)} 个变体)")

    def list_axes(self) -> Dict[str, List[str]]:
        if not self._initialized:
            self._initialize_axes()
        return {axis: [v.name for v in variants] for axis, variants in self.axes.items()}


# 全局消融注册表实例
ablation_registry = AblationRegistry()
