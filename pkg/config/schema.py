"""
运行配置数据结构

所有配置段都是 pydantic 模型，未知键一律报错（extra="forbid"）。
"""
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config.presets import (
    CITYSCAPES_CLASSES,
    DEFAULT_SNR_GRID,
    FULL_CODEC,
    TOY_CODEC,
    synthetic_class_names,
)


class _Section(BaseModel):
    """配置段基类：禁止未知键"""
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class DatasetSpec(_Section):
    """数据集描述"""
    kind: Literal["cityscapes", "synthetic"] = "synthetic"
    root: str = "data/cityscapes"
    split: Literal["train", "val", "test"] = "train"
    eval_split: Literal["train", "val", "test"] = "val"
    # (h_c, w_c)；Cityscapes 常用 512x1024，合成数据 64x64
    crop_size: Tuple[int, int] = (64, 64)
    random_crop: bool = True
    hflip: bool = True
    photometric: bool = True
    n_cls: int = 4
    # 合成数据参数
    image_size: Tuple[int, int] = (64, 64)
    n_images: int = 256
    n_eval_images: int = 64
    # 光度扰动幅度（brightness 以 8bit 计）
    brightness_delta: float = 32.0
    contrast_range: Tuple[float, float] = (0.5, 1.5)
    saturation_range: Tuple[float, float] = (0.5, 1.5)
    hue_delta: float = 18.0
    seed: Optional[int] = None

    @field_validator("crop_size", "image_size")
    @classmethod
    def _divisible_by_32(cls, v):
        if v[0] <= 0 or v[1] <= 0 or v[0] % 32 or v[1] % 32:
            raise ValueError(f"尺寸 {v} 必须为 32 的正整数倍")
        return v

    @field_validator("n_cls")
    @classmethod
    def _at_least_two(cls, v):
        if v < 2:
            raise ValueError("n_cls 至少为 2")
        return v

    @property
    def class_names(self) -> List[str]:
        if self.kind == "cityscapes":
            return list(CITYSCAPES_CLASSES)
        return synthetic_class_names(self.n_cls)


class CodecConfig(_Section):
    """语义编解码器结构参数"""
    embed_dim: int = TOY_CODEC["embed_dim"]
    depths: List[int] = Field(default_factory=lambda: list(TOY_CODEC["depths"]))
    heads: List[int] = Field(default_factory=lambda: list(TOY_CODEC["heads"]))
    window_size: int = TOY_CODEC["window_size"]
    patch_size: int = 4
    mlp_ratio: float = 4.0
    k_channels: int = 32
    n_cls: Optional[int] = None
    aggregator_activation: bool = False
    aux_head: bool = True

    @model_validator(mode="after")
    def _check_structure(self):
        if len(self.depths) != 4 or len(self.heads) != 4:
            raise ValueError("depths 与 heads 必须各有 4 个 stage")
        if any(d < 1 for d in self.depths):
            raise ValueError(f"每个 stage 至少 1 个 STB: {self.depths}")
        for s, h in enumerate(self.heads):
            dim = self.embed_dim * 2 ** s
            if h < 1 or dim % h:
                raise ValueError(f"stage {s + 1} 通道数 {dim} 不能被 head 数 {h} 整除")
        if self.window_size < 1 or self.k_channels < 1:
            raise ValueError("window_size 与 k_channels 必须为正")
        return self

    @classmethod
    def full(cls, **overrides) -> "CodecConfig":
        return cls(**{**FULL_CODEC, "k_channels": 256, **overrides})

    @classmethod
    def toy(cls, **overrides) -> "CodecConfig":
        return cls(**{**TOY_CODEC, **overrides})


class ChannelConfig(_Section):
    """无线信道参数"""
    mode: Literal["identity", "awgn", "rayleigh_doppler"] = "rayleigh_doppler"
    snr_db: float = 10.0
    carrier_ghz: float = 5.9
    velocity_kmh: float = 50.0
    bandwidth_mhz: float = 20.0
    link_budget: bool = False
    shadowing_std_db: float = 8.0
    tx_power_dbm: float = 23.0
    path_loss_db: float = 105.0
    noise_figure_db: float = 9.0
    equalizer: Literal["zf", "raw"] = "zf"
    seed: Optional[int] = None

    @field_validator("snr_db")
    @classmethod
    def _finite(cls, v):
        if v != v or v in (float("inf"), float("-inf")):
            raise ValueError("snr_db 必须为有限值（无噪声请使用 mode=identity）")
        return v

    @field_validator("velocity_kmh")
    @classmethod
    def _nonnegative(cls, v):
        if v < 0:
            raise ValueError("velocity_kmh 不能为负")
        return v

    @field_validator("bandwidth_mhz", "carrier_ghz")
    @classmethod
    def _positive(cls, v):
        if v <= 0:
            raise ValueError("带宽与载频必须为正")
        return v

    @property
    def carrier_hz(self) -> float:
        return self.carrier_ghz * 1e9

    @property
    def velocity_mps(self) -> float:
        return self.velocity_kmh / 3.6

    @property
    def bandwidth_hz(self) -> float:
        return self.bandwidth_mhz * 1e6


class OhemConfig(_Section):
    """在线难例挖掘参数"""
    enabled: bool = True
    thresh: float = 0.7
    min_kept: float = Field(
        0.19,
        description="(0, 1) 为有效像素占比（toy 规模 0.19）；>= 1 为绝对像素数（完整规模 100000）。"
                    "边界值 1.0 表示 1 个像素而不是 100%，要保留全部像素请关闭 OHEM",
    )

    @field_validator("thresh")
    @classmethod
    def _thresh_range(cls, v):
        if not 0 < v <= 1:
            raise ValueError("ohem.thresh 必须在 (0, 1] 内")
        return v

    @field_validator("min_kept")
    @classmethod
    def _min_kept_positive(cls, v):
        if v <= 0:
            raise ValueError("ohem.min_kept 必须为正")
        if v > 1 and v != int(v):
            raise ValueError("ohem.min_kept 大于 1 时必须为整数")
        return v


class LossConfig(_Section):
    """重要性感知损失参数"""
    b1: float = 1.0
    b2: float = 0.4
    ohem: OhemConfig = Field(default_factory=OhemConfig)
    # 按类别名覆盖类别平衡系数
    weights: Dict[str, float] = Field(default_factory=dict)
    # 重要类别名；为空时使用数据集默认（Cityscapes 12 类 / 合成数据稀有类）
    important: List[str] = Field(default_factory=list)
    use_weights: bool = True
    use_iou: bool = True
    iou_per_image: bool = False

    @field_validator("b1", "b2")
    @classmethod
    def _nonnegative(cls, v):
        if v < 0:
            raise ValueError("b1/b2 不能为负")
        return v

    @field_validator("weights")
    @classmethod
    def _positive_weights(cls, v):
        bad = {k: w for k, w in v.items() if w <= 0}
        if bad:
            raise ValueError(f"类别平衡系数必须为正: {bad}")
        return v


class TrainConfig(_Section):
    """训练参数"""
    iterations: int = 2000
    batch_size: int = 8
    lr: float = 1e-4
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0
    snr_low: float = 1.0
    snr_high: float = 20.0
    warmup_iters: int = 0
    grad_clip: Optional[float] = None
    checkpoint_every: int = 500
    log_every: int = 50
    seed: Optional[int] = None

    @field_validator("lr")
    @classmethod
    def _lr_positive(cls, v):
        if v <= 0:
            raise ValueError("学习率必须为正")
        return v

    @model_validator(mode="after")
    def _snr_range(self):
        if self.snr_low > self.snr_high:
            raise ValueError(f"snr_low={self.snr_low} 大于 snr_high={self.snr_high}")
        if self.iterations < 0 or self.batch_size < 1:
            raise ValueError("iterations 不能为负，batch_size 至少为 1")
        return self


class BaselineConfig(_Section):
    """传统 JPEG + LDPC + QAM 链路参数"""
    jpeg_quality: int = 75
    # 给定时按字节预算搜索 JPEG 质量，覆盖 jpeg_quality
    target_r: Optional[float] = None
    qam_order: Literal[4, 16, 64] = 4
    ldpc_code: str = "wifi_648_r23"
    bp_iterations: int = 50
    decoder: Literal["min_sum", "sum_product"] = "min_sum"
    min_sum_scale: float = 0.8
    interleave: bool = True
    interleaver_seed: int = 7
    power_tolerance: float = 0.25
    segmenter_checkpoint: Optional[str] = None

    @field_validator("jpeg_quality")
    @classmethod
    def _quality_range(cls, v):
        if not 1 <= v <= 100:
            raise ValueError("jpeg_quality 必须在 [1, 100] 内")
        return v


class EvalConfig(_Section):
    """评测参数"""
    snr_grid: List[float] = Field(default_factory=lambda: list(DEFAULT_SNR_GRID))
    n_realizations: int = 1
    batch_size: int = 8
    # 限定参与 mIoU 平均的类别；为空表示全部类别
    miou_classes: List[str] = Field(default_factory=list)
    plot: bool = False

    @field_validator("snr_grid")
    @classmethod
    def _nonempty_increasing(cls, v):
        if not v:
            raise ValueError("snr_grid 不能为空")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("snr_grid 必须严格递增")
        return v


class AblationConfig(_Section):
    """消融实验参数"""
    # 每个变体的训练迭代数；为空沿用 train.iterations
    iterations: Optional[int] = None
    snr_test: float = 19.0
    # stb_combo 轴：其余组合由 [2, 2, 18, 2] 迁移初始化
    transfer: bool = True


class RunConfig(_Section):
    """一次运行的完整配置"""
    seed: int = 0
    data: DatasetSpec = Field(default_factory=DatasetSpec)
    codec: CodecConfig = Field(default_factory=CodecConfig)
    channel: ChannelConfig = Field(default_factory=ChannelConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    ablation: AblationConfig = Field(default_factory=AblationConfig)

    @model_validator(mode="after")
    def _propagate(self):
        # 子段未指定的种子与类别数从顶层继承
        if self.data.seed is None:
            self.data.seed = self.seed
        if self.train.seed is None:
            self.train.seed = self.seed
        if self.channel.seed is None:
            self.channel.seed = self.seed
        if self.codec.n_cls is None:
            self.codec.n_cls = self.data.n_cls
        elif self.codec.n_cls != self.data.n_cls:
            raise ValueError(f"codec.n_cls={self.codec.n_cls} 与 data.n_cls={self.data.n_cls} 不一致")
        if self.data.kind == "cityscapes" and self.data.n_cls != len(CITYSCAPES_CLASSES):
            raise ValueError("Cityscapes 数据集固定为 19 类")
        names = self.data.class_names
        unknown = [c for c in list(self.loss.weights) + self.loss.important + self.eval.miou_classes
                   if c not in names]
        if unknown:
            raise ValueError(f"未知类别名: {unknown}")
        return self
