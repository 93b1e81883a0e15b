"""
异常定义
"""
from typing import Optional, Sequence


class VisSemComError(Exception):
    """所有项目异常的基类"""


class ConfigurationError(VisSemComError, ValueError):
    """配置错误：未知键、非法取值、目录缺失等"""


class DataError(VisSemComError, ValueError):
    """数据错误：形状不一致、非法标签值等"""


class UsageError(VisSemComError, RuntimeError):
    """调用方式错误，例如推理阶段调用训练专用的辅助头"""


class ContractViolationError(VisSemComError, AssertionError):
    """接口约定被破坏，例如信道输入未做功率归一化"""


class UndefinedMetricError(DataError):
    """指标无定义：所有类别 IoU 均为 0/0，或曲线未达到目标 mIoU"""


class NonFiniteLossError(VisSemComError, FloatingPointError):
    """训练损失出现 NaN/Inf"""

    def __init__(self, iteration: int, snr_db: float, batch_ids: Optional[Sequence[int]] = None):
        self.iteration = iteration
        self.snr_db = snr_db
        self.batch_ids = list(batch_ids) if batch_ids is not None else []
        super().__init__(
            f"损失非有限值: iteration={iteration}, snr_db={snr_db:.3f}, batch_ids={self.batch_ids}"
        )
