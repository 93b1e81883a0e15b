"""
重要性感知损失

加权交叉熵 + 重要类别的 soft IoU，主头与 FCN 辅助头按 b1、b2 加权求和；
交叉熵项的像素集合由 OHEM 选择。
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import torch
import torch.nn.functional as F

from config.presets import IGNORE_INDEX
from config.schema import LossConfig
from core.data.class_weights import ClassWeights
from core.errors import ConfigurationError

LOG_CLAMP = 1e-12


def _valid(labels: torch.Tensor) -> torch.Tensor:
    return labels != IGNORE_INDEX


def _safe_labels(labels: torch.Tensor) -> torch.Tensor:
    return torch.where(_valid(labels), labels, torch.zeros_like(labels))


def gt_confidence(probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """每个像素上真实类别的预测概率 (B, H, W)，ignore 像素取 0"""
    conf = probs.gather(1, _safe_labels(labels).unsqueeze(1)).squeeze(1)
    return torch.where(_valid(labels), conf, torch.zeros_like(conf))


def weighted_ce(probs: torch.Tensor, labels: torch.Tensor, w: torch.Tensor,
                mask: Optional[torch.Tensor] = None) -> torch.Tensor:
    """
    加权交叉熵，对 mask 内全部像素取平均

    probs: (B, C, H, W) 已 softmax；labels: (B, H, W)；w: (C,)
    mask 为空集时返回 0（梯度为 0）。
    """
    valid = _valid(labels)
    if mask is not None:
        valid = valid & mask
    safe = _safe_labels(labels)
    p_y = probs.gather(1, safe.unsqueeze(1)).squeeze(1)
    w = torch.as_tensor(w, dtype=probs.dtype, device=probs.device)
    term = -w[safe] * torch.log(p_y.clamp_min(LOG_CLAMP))
    term = torch.where(valid, term, torch.zeros_like(term))
    return term.sum() / valid.sum().clamp_min(1).to(probs.dtype)


def soft_iou_loss(probs: torch.Tensor, labels: torch.Tensor, important: Sequence[int],
                  per_image: bool = False) -> torch.Tensor:
    """
    重要类别的可微 IoU 损失: mean_i (1 - I_i / U_i)

    I_i = Σ p·g，U_i = Σ (p + g - p·g)，只统计非 ignore 像素；U_i = 0 的类别跳过。
    per_image=True 时按 (图像, 类别) 统计后平均。
    """
    important = list(important)
    if not important:
        raise ConfigurationError("重要类别集合不能为空")
    n_cls = probs.shape[1]
    valid = _valid(labels).unsqueeze(1).to(probs.dtype)
    idx = torch.as_tensor(important, device=probs.device)
    g = F.one_hot(_safe_labels(labels), n_cls).permute(0, 3, 1, 2).to(probs.dtype)
    g = (g * valid).index_select(1, idx)
    p = (probs * valid).index_select(1, idx)

    dims = (2, 3) if per_image else (0, 2, 3)
    inter = (p * g).sum(dim=dims)
    union = (p + g - p * g).sum(dim=dims)
    defined = union > 0
    if not bool(defined.any()):
        return probs.sum() * 0.0
    ratio = inter[defined] / union[defined]
    return (1.0 - ratio).mean()


@dataclass
class LossTerms:
    total: torch.Tensor
    ce: torch.Tensor
    iou: torch.Tensor


def importance_aware_loss(probs: torch.Tensor, labels: torch.Tensor, w: torch.Tensor,
                          important: Sequence[int], mask: Optional[torch.Tensor] = None,
                          use_iou: bool = True, per_image: bool = False) -> LossTerms:
    """L_IA = soft IoU + 加权交叉熵"""
    ce = weighted_ce(probs, labels, w, mask)
    if use_iou:
        iou = soft_iou_loss(probs, labels, important, per_image)
    else:
        iou = torch.zeros((), dtype=probs.dtype, device=probs.device)
    return LossTerms(total=ce + iou, ce=ce, iou=iou)


def total_loss(main: torch.Tensor, aux: Optional[torch.Tensor], b1: float, b2: float) -> torch.Tensor:
    """L = b1·L_main + b2·L_aux"""
    if aux is None:
        return b1 * main
    return b1 * main + b2 * aux


def resolve_min_kept(min_kept: float, n_valid: int) -> int:
    """min_kept < 1 视为有效像素占比，否则为像素数；下限为 1"""
    if min_kept < 1:
        return max(1, int(min_kept * n_valid))
    return max(1, int(min_kept))


@torch.no_grad()
def ohem_mask(conf: torch.Tensor, valid: torch.Tensor, thresh: float, min_kept: float) -> torch.Tensor:
    """
    难例像素选择

    先取置信度 < thresh 的有效像素；不足 min_kept 个时改取置信度最低的 min_kept 个
    （置信度相同按像素序号升序）；有效像素不足 min_kept 时全部保留。
    """
    flat_conf = conf.detach().reshape(-1)
    flat_valid = valid.reshape(-1).bool()
    n_valid = int(flat_valid.sum())
    if n_valid == 0:
        return torch.zeros_like(valid, dtype=torch.bool)

    keep = resolve_min_kept(min_kept, n_valid)
    if n_valid <= keep:
        return valid.clone().bool()

    hard = flat_valid & (flat_conf < thresh)
    if int(hard.sum()) >= keep:
        return hard.view_as(valid)

    idx = torch.nonzero(flat_valid, as_tuple=False).squeeze(1)
    order = torch.sort(flat_conf[idx], stable=True).indices
    selected = torch.zeros_like(flat_valid)
    selected[idx[order[:keep]]] = True
    return selected.view_as(valid)


@dataclass
class LossBreakdown:
    total: torch.Tensor
    main: torch.Tensor
    aux: Optional[torch.Tensor]
    ce: torch.Tensor
    iou: torch.Tensor
    kept_fraction: float


class ImportanceAwareCriterion:
    """
    训练目标 L = b1·L_IA(主头) + b2·L_IA(辅助头)

    use_weights=False 时类别权重全部为 1；use_iou=False 时去掉 soft IoU 项；
    两者都关闭且不启用 OHEM 即为普通交叉熵。
    """

    def __init__(self, cfg: LossConfig, weights: ClassWeights):
        self.cfg = cfg
        self.weights = weights
        self.important = weights.important_ids
        if cfg.use_iou and not self.important:
            raise ConfigurationError("soft IoU 需要至少一个重要类别")

    def class_weight_tensor(self, dtype, device) -> torch.Tensor:
        w = torch.as_tensor(self.weights.w, dtype=dtype, device=device)
        return w if self.cfg.use_weights else torch.ones_like(w)

    def head_loss(self, logits: torch.Tensor, labels: torch.Tensor):
        probs = logits.softmax(dim=1)
        mask = None
        kept = 1.0
        if self.cfg.ohem.enabled:
            valid = _valid(labels)
            mask = ohem_mask(gt_confidence(probs, labels), valid,
                             self.cfg.ohem.thresh, self.cfg.ohem.min_kept)
            kept = float(mask.sum()) / max(int(valid.sum()), 1)
        terms = importance_aware_loss(probs, labels, self.class_weight_tensor(probs.dtype, probs.device),
                                      self.important, mask, self.cfg.use_iou, self.cfg.iou_per_image)
        return terms, kept

    def __call__(self, logits: torch.Tensor, labels: torch.Tensor,
                 aux_logits: Optional[torch.Tensor] = None) -> LossBreakdown:
        main, kept = self.head_loss(logits, labels)
        aux = self.head_loss(aux_logits, labels)[0].total if aux_logits is not None else None
        total = total_loss(main.total, aux, self.cfg.b1, self.cfg.b2)
        return LossBreakdown(total=total, main=main.total, aux=aux, ce=main.ce, iou=main.iou,
                             kept_fraction=kept)
