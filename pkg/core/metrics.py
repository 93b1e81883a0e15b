"""
评测指标：混淆矩阵、IoU / mIoU、压缩率、编码增益与结果 CSV
"""
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, field_validator

from config.presets import IGNORE_INDEX
from core.errors import ConfigurationError, DataError, UndefinedMetricError


class ConfusionMatrix:
    """counts[g, p] = 真实类别 g 被预测为 p 的像素数，ignore 像素不计"""

    def __init__(self, n_cls: int):
        self.n_cls = n_cls
        self.counts = np.zeros((n_cls, n_cls), dtype=np.int64)

    def update(self, pred, gt) -> "ConfusionMatrix":
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise DataError(f"预测与标签形状不一致: {pred.shape} vs {gt.shape}")
        keep = gt != IGNORE_INDEX
        g = gt[keep].astype(np.int64)
        p = pred[keep].astype(np.int64)
        if g.size and (g.max() >= self.n_cls or p.max() >= self.n_cls or g.min() < 0 or p.min() < 0):
            raise DataError(f"类别 id 超出 [0, {self.n_cls})")
        self.counts += np.bincount(g * self.n_cls + p, minlength=self.n_cls ** 2).reshape(self.n_cls, self.n_cls)
        return self

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.n_cls != self.n_cls:
            raise DataError(f"类别数不一致: {self.n_cls} vs {other.n_cls}")
        merged = ConfusionMatrix(self.n_cls)
        merged.counts = self.counts + other.counts
        return merged

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_update(cm: ConfusionMatrix, pred, gt) -> ConfusionMatrix:
    return cm.update(pred, gt)


def iou_per_class(cm: ConfusionMatrix) -> np.ndarray:
    """IoU_i = cm[i,i] / (行和 + 列和 - cm[i,i])，分母为 0 的类别为 NaN"""
    counts = cm.counts.astype(np.float64)
    inter = np.diag(counts)
    union = counts.sum(axis=1) + counts.sum(axis=0) - inter
    iou = np.full(cm.n_cls, np.nan)
    defined = union > 0
    iou[defined] = inter[defined] / union[defined]
    return iou


def miou(cm: ConfusionMatrix, classes: Optional[Sequence[int]] = None) -> float:
    """已定义类别 IoU 的平均；classes 给定时只在这些类别上平均"""
    iou = iou_per_class(cm)
    if classes is not None and len(classes) > 0:
        iou = iou[list(classes)]
    if np.all(np.isnan(iou)):
        raise UndefinedMetricError("所有类别的 IoU 都未定义，无法计算 mIoU")
    return float(np.nanmean(iou))


def compression_ratio(H: int, W: int, K: int) -> float:
    """R = H·W·3 / ((H/16)·(W/16)·K)"""
    if K <= 0:
        raise ConfigurationError(f"K 必须为正: {K}")
    if H % 16 or W % 16:
        raise ConfigurationError(f"H、W 必须为 16 的整数倍: ({H}, {W})")
    return (H * W * 3) / ((H // 16) * (W // 16) * K)


def k_for_ratio(R: float) -> int:
    """compression_ratio 的逆：K = 768 / R"""
    K = 768.0 / R
    if K < 1 or abs(K - round(K)) > 1e-9:
        raise ConfigurationError(f"R={R} 不对应整数 K")
    return int(round(K))


class MiouCurve(BaseModel):
    """一条 mIoU-SNR 曲线"""
    scheme: str
    velocity_kmh: float = 0.0
    R: Optional[float] = None
    snr_db: List[float]
    miou: List[float]

    @field_validator("snr_db")
    @classmethod
    def _increasing(cls, v):
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("snr_db 必须严格递增")
        return v

    @property
    def name(self) -> str:
        r = f", R={self.R:g}" if self.R is not None else ""
        return f"{self.scheme} @ {self.velocity_kmh:g} km/h{r}"

    def snr_at(self, target: float) -> float:
        """分段线性插值得到首次达到 target mIoU 所需的 SNR"""
        snr = np.asarray(self.snr_db, dtype=np.float64)
        m = np.asarray(self.miou, dtype=np.float64)
        if len(m) == 0:
            raise UndefinedMetricError(f"曲线 {self.name} 为空")
        if m[0] >= target:
            if m[0] == target:
                return float(snr[0])
            raise UndefinedMetricError(f"曲线 {self.name} 在最低 SNR 已超过目标 {target}，无法确定交点")
        for i in range(1, len(m)):
            if m[i] >= target:
                t = (target - m[i - 1]) / (m[i] - m[i - 1])
                return float(snr[i - 1] + t * (snr[i] - snr[i - 1]))
        raise UndefinedMetricError(f"曲线 {self.name} 未达到目标 mIoU {target}")


def coding_gain(curve_a: MiouCurve, curve_b: MiouCurve, target_miou: float) -> float:
    """SNR_b(target) - SNR_a(target)，为正表示 a 所需 SNR 更低"""
    return curve_b.snr_at(target_miou) - curve_a.snr_at(target_miou)


#------------------------------------------------------------------#
#   结果 CSV: scheme,velocity_kmh,R,snr_db,miou,iou_<classname>...
#------------------------------------------------------------------#
BASE_COLUMNS = ["scheme", "velocity_kmh", "R", "snr_db", "miou"]


def result_row(scheme: str, velocity_kmh: float, R: Optional[float], snr_db: float,
               cm: ConfusionMatrix, class_names: Sequence[str],
               miou_classes: Optional[Sequence[int]] = None) -> Dict:
    iou = iou_per_class(cm)
    row = {
        "scheme": scheme,
        "velocity_kmh": velocity_kmh,
        "R": R,
        "snr_db": snr_db,
        "miou": miou(cm, miou_classes),
    }
    for name, value in zip(class_names, iou):
        row[f"iou_{name}"] = value
    return row


def write_results(rows: List[Dict], path, class_names: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = BASE_COLUMNS + [f"iou_{n}" for n in class_names]
    df = pd.DataFrame(rows).reindex(columns=columns)
    df.to_csv(path, index=False, float_format="%.6f")
    return path


def read_results(path) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"结果文件不存在: {path}")
    df = pd.read_csv(path)
    missing = [c for c in BASE_COLUMNS if c not in df.columns]
    if missing:
        raise DataError(f"结果文件 {path} 缺少列: {missing}")
    return df


def curves_from_results(df: pd.DataFrame) -> List[MiouCurve]:
    """按 (scheme, velocity_kmh, R) 分组还原曲线"""
    curves = []
    keys = ["scheme", "velocity_kmh", "R"]
    for (scheme, v, R), group in df.groupby(keys, dropna=False, sort=False):
        group = group.sort_values("snr_db")
        curves.append(MiouCurve(
            scheme=str(scheme),
            velocity_kmh=float(v),
            R=None if pd.isna(R) else float(R),
            snr_db=group["snr_db"].astype(float).tolist(),
            miou=group["miou"].astype(float).tolist(),
        ))
    return curves
