"""
VIS-SemCom 端到端模型

发送端: Swin 多尺度特征提取 → 特征聚合 → 复符号映射
信道:   core.channel（衰落 + 噪声 + 均衡）
接收端: 语义特征解码 → 重建器 → 分割 logits
"""
from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn as nn

from config.schema import ChannelConfig, CodecConfig
from core.channel import ChannelRealization, equalize, transmit
from core.channel.functional import GeneratorArg
from core.errors import ConfigurationError
from .heads import AuxFCNHead, FeatureAggregator, Reconstructor, SemanticFeatureDecoder
from .swin import FeaturePyramid, SwinEncoder
from .symbols import TxSymbols, from_symbols, to_symbols


@dataclass
class CodecOutput:
    logits: torch.Tensor                  # (B, N_cls, H, W)
    aux_logits: Optional[torch.Tensor]    # 训练模式下的辅助头输出
    feature: torch.Tensor                 # (B, K, H/16, W/16) 聚合器输出
    tx: TxSymbols
    realization: ChannelRealization
    erased: torch.Tensor                  # (B, k) bool


def _init_weights(m: nn.Module):
    if isinstance(m, nn.Linear):
        nn.init.trunc_normal_(m.weight, std=.02)
        if m.bias is not None:
            nn.init.zeros_(m.bias)
    elif isinstance(m, nn.LayerNorm):
        nn.init.ones_(m.weight)
        nn.init.zeros_(m.bias)


class VisSemCom(nn.Module):
    def __init__(self, cfg: CodecConfig):
        super().__init__()
        if cfg.n_cls is None:
            raise ConfigurationError("codec.n_cls 未设置")
        self.cfg = cfg
        C, K = cfg.embed_dim, cfg.k_channels
        self.encoder = SwinEncoder(cfg)
        self.aggregator = FeatureAggregator(C, K, activation=cfg.aggregator_activation)
        self.decoder = SemanticFeatureDecoder(K)
        self.reconstructor = Reconstructor(K, cfg.n_cls)
        self.aux_head = AuxFCNHead(4 * C, C, cfg.n_cls) if cfg.aux_head else None
        self.apply(_init_weights)

    # ----------------------------- 发送端 -----------------------------
    def encode(self, images: torch.Tensor) -> FeaturePyramid:
        return self.encoder(images)

    def aggregate(self, pyramid: FeaturePyramid) -> torch.Tensor:
        return self.aggregator(pyramid)

    # ----------------------------- 接收端 -----------------------------
    def decode_features(self, f: torch.Tensor) -> torch.Tensor:
        return self.decoder(f)

    def reconstruct(self, f: torch.Tensor, out_size=None):
        """返回 (logits, label_map)；out_size 给定时裁掉填充"""
        logits = self.reconstructor(f)
        if out_size is not None:
            logits = logits[..., :out_size[0], :out_size[1]]
        return logits, logits.argmax(dim=1)

    def aux_decode(self, f3: torch.Tensor, out_size=None) -> torch.Tensor:
        if self.aux_head is None:
            raise ConfigurationError("模型未配置辅助解码头 (codec.aux_head=false)")
        logits = self.aux_head(f3)
        if out_size is not None:
            logits = logits[..., :out_size[0], :out_size[1]]
        return logits

    def forward(self, images: torch.Tensor, channel_cfg: ChannelConfig,
                generator: GeneratorArg = None, power_tol: float = 1e-6) -> CodecOutput:
        out_size = images.shape[-2:]
        pyramid = self.encode(images)
        feature = self.aggregate(pyramid)

        tx = to_symbols(feature)
        rx, realization = transmit(tx.symbols, channel_cfg, generator, power_tol)
        y_eq, erased = equalize(rx, realization.h, channel_cfg.equalizer)

        received = self.decode_features(from_symbols(y_eq, tx))
        logits, _ = self.reconstruct(received, out_size)
        aux = None
        if self.training and self.aux_head is not None:
            aux = self.aux_decode(pyramid.f3, out_size)
        return CodecOutput(logits=logits, aux_logits=aux, feature=feature, tx=tx,
                           realization=realization, erased=erased)

    def segment(self, images: torch.Tensor):
        """不经过信道的分割路径，返回 (logits, label_map)"""
        feature = self.aggregate(self.encode(images))
        return self.reconstruct(self.decode_features(feature), images.shape[-2:])

    def deployed_parameters(self):
        """部署时保留的参数（不含辅助头）"""
        for name, p in self.named_parameters():
            if not name.startswith("aux_head."):
                yield p

    def num_deployed_parameters(self) -> int:
        return sum(p.numel() for p in self.deployed_parameters())


def build_model(cfg: CodecConfig, dtype: torch.dtype = torch.float32, device: str = "cpu") -> VisSemCom:
    return VisSemCom(cfg).to(device=device, dtype=dtype)
