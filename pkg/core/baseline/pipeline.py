"""
传统分离式链路

JPEG → LDPC → 交织 → QAM → 信道 → ZF 均衡 → 软解调 → 解交织 → LDPC 译码
→ JPEG 解码（失败时用中灰图像）→ 分割网络
"""
from dataclasses import asdict, dataclass

import numpy as np
import torch

from config.schema import BaselineConfig, ChannelConfig
from core.channel import equalize, transmit
from core.channel.functional import GeneratorArg
from core.errors import ConfigurationError
from .jpeg import jpeg_decode, jpeg_encode, raw_size, search_jpeg_quality
from .ldpc import ldpc_decode, ldpc_encode, load_code
from .qam import bits_per_symbol, deinterleave, hard_decision, interleave, qam_demodulate, qam_modulate

FALLBACK_GRAY = 0.5


@dataclass
class BaselineStats:
    quality: int
    n_bytes: int
    achieved_r: float
    raw_ber: float
    coded_ber: float
    converged_fraction: float
    jpeg_ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


@torch.no_grad()
def segment_image(segmenter, img: np.ndarray) -> np.ndarray:
    """用编解码网络的无信道路径分割单张 (H, W, 3) 图像"""
    param = next(segmenter.parameters())
    x = torch.from_numpy(np.ascontiguousarray(img.transpose(2, 0, 1))).unsqueeze(0)
    x = x.to(device=param.device, dtype=param.dtype)
    was_training = segmenter.training
    segmenter.eval()
    try:
        _, label_map = segmenter.segment(x)
    finally:
        segmenter.train(was_training)
    return label_map[0].cpu().numpy().astype(np.int64)


def transmit_bits(bits: np.ndarray, cfg: BaselineConfig, channel_cfg: ChannelConfig,
                  generator: GeneratorArg = None):
    """
    比特流经 LDPC + QAM + 信道后的译码结果

    返回 (译码信息比特, 信道硬判决误比特率, 收敛块占比)
    """
    code = load_code(cfg.ldpc_code)
    codewords, _ = ldpc_encode(bits, code)
    coded = codewords.reshape(-1)
    tx_bits = interleave(coded, cfg.interleaver_seed) if cfg.interleave else coded

    m = bits_per_symbol(cfg.qam_order)
    pad = (-tx_bits.size) % m
    tx_bits = np.concatenate([tx_bits, np.zeros(pad, dtype=np.uint8)])

    x = torch.from_numpy(qam_modulate(tx_bits, cfg.qam_order)).unsqueeze(0)
    y, realization = transmit(x, channel_cfg, generator, power_tol=cfg.power_tolerance)
    y_eq, erased = equalize(y, realization.h, "zf")

    h2 = (realization.h.real ** 2 + realization.h.imag ** 2)[0].numpy()
    sigma2 = float(realization.sigma2[0])
    var = np.where(erased[0].numpy(), np.inf, sigma2 / np.maximum(h2, 1e-300))
    llrs = qam_demodulate(y_eq[0].numpy(), cfg.qam_order, var)[:coded.size]
    if cfg.interleave:
        llrs = deinterleave(llrs, cfg.interleaver_seed)

    raw_ber = float(np.mean(hard_decision(llrs) != coded)) if coded.size else 0.0
    info, converged = ldpc_decode(llrs.reshape(-1, code.n), code, cfg.bp_iterations,
                                  cfg.decoder, cfg.min_sum_scale)
    return info.reshape(-1)[:bits.size], raw_ber, float(converged.mean()) if converged.size else 1.0


def run_baseline(img: np.ndarray, cfg: BaselineConfig, channel_cfg: ChannelConfig,
                 segmenter=None, generator: GeneratorArg = None):
    """
    单张图像的传统链路，返回 (LabelMap, BaselineStats)

    JPEG 字节流无法解码时以中灰图像代替，jpeg_ok=False。
    """
    if segmenter is None:
        raise ConfigurationError("传统链路需要分割网络 (baseline.segmenter_checkpoint)")

    if cfg.target_r is not None:
        quality, data, achieved_r = search_jpeg_quality(img, cfg.target_r)
    else:
        quality = cfg.jpeg_quality
        data = jpeg_encode(img, quality)
        achieved_r = raw_size(img) / len(data)

    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    decoded, raw_ber, converged = transmit_bits(bits, cfg, channel_cfg, generator)
    coded_ber = float(np.mean(decoded != bits)) if bits.size else 0.0

    received = jpeg_decode(np.packbits(decoded).tobytes(), expected_size=img.shape[:2])
    jpeg_ok = received is not None
    if not jpeg_ok:
        received = np.full(img.shape, FALLBACK_GRAY, dtype=np.float32)

    label_map = segment_image(segmenter, received)
    stats = BaselineStats(quality=quality, n_bytes=len(data), achieved_r=achieved_r, raw_ber=raw_ber,
                          coded_ber=coded_ber, converged_fraction=converged, jpeg_ok=jpeg_ok)
    return label_map, stats


def run_baseline_reference(img: np.ndarray, cfg: BaselineConfig, segmenter) -> np.ndarray:
    """无信道时的参考输出: segmenter(jpeg_round(img))"""
    quality = search_jpeg_quality(img, cfg.target_r)[0] if cfg.target_r is not None else cfg.jpeg_quality
    recon = jpeg_decode(jpeg_encode(img, quality))
    return segment_image(segmenter, recon)
