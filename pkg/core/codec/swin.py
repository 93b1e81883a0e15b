"""
多尺度语义特征提取器（Swin Transformer 主干）

张量布局统一为 channels-last: (B, H, W, C)。
"""
from typing import List, NamedTuple, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from config.schema import CodecConfig
from core.errors import ConfigurationError, UsageError


class FeaturePyramid(NamedTuple):
    """F1..F4，均为 channels-first (B, C_s, H/2^{s+1}, W/2^{s+1})"""
    f1: torch.Tensor
    f2: torch.Tensor
    f3: torch.Tensor
    f4: torch.Tensor


def _pad_grid(x: torch.Tensor, multiple: int) -> Tuple[torch.Tensor, int, int]:
    """把 (B, H, W, C) 的 H、W 反射填充到 multiple 的整数倍，返回 (x, pad_h, pad_w)"""
    _, H, W, _ = x.shape
    pad_h = (-H) % multiple
    pad_w = (-W) % multiple
    if pad_h == 0 and pad_w == 0:
        return x, 0, 0
    mode = "reflect" if pad_h < H and pad_w < W else "replicate"
    x = F.pad(x.permute(0, 3, 1, 2), (0, pad_w, 0, pad_h), mode=mode).permute(0, 2, 3, 1)
    return x, pad_h, pad_w


#------------------------------------------------------------------#
#   窗口划分: (B, H, W, C) -> (B * nW, M, M, C)
#   H、W 不是 M 的整数倍时先填充，window_reverse 负责裁掉填充
#------------------------------------------------------------------#
def window_partition(x: torch.Tensor, window_size: int) -> torch.Tensor:
    x, _, _ = _pad_grid(x, window_size)
    B, Hp, Wp, C = x.shape
    M = window_size
    x = x.view(B, Hp // M, M, Wp // M, M, C)
    return x.permute(0, 1, 3, 2, 4, 5).contiguous().view(-1, M, M, C)


def window_reverse(windows: torch.Tensor, window_size: int, H: int, W: int) -> torch.Tensor:
    M = window_size
    Hp = -(-H // M) * M
    Wp = -(-W // M) * M
    B = windows.shape[0] // ((Hp // M) * (Wp // M))
    x = windows.view(B, Hp // M, Wp // M, M, M, -1)
    x = x.permute(0, 1, 3, 2, 4, 5).contiguous().view(B, Hp, Wp, -1)
    return x[:, :H, :W, :]


def relative_position_index(window: int, table_window: int) -> torch.Tensor:
    """
    window×window 窗口内 token 两两之间的相对位置在 (2M-1)^2 偏置表中的索引

    window 可以小于偏置表对应的 M（特征图小于窗口时窗口会收缩）
    """
    coords = torch.stack(torch.meshgrid(torch.arange(window), torch.arange(window), indexing="ij"))
    coords = coords.flatten(1)
    rel = (coords[:, :, None] - coords[:, None, :]).permute(1, 2, 0)
    rel = rel + (table_window - 1)
    return rel[..., 0] * (2 * table_window - 1) + rel[..., 1]


class PatchEmbed(nn.Module):
    """4×4×3 图像块线性嵌入到 C 维，再做 LayerNorm"""

    def __init__(self, patch_size: int = 4, in_chans: int = 3, embed_dim: int = 96):
        super().__init__()
        self.patch_size = patch_size
        self.proj = nn.Conv2d(in_chans, embed_dim, kernel_size=patch_size, stride=patch_size)
        self.norm = nn.LayerNorm(embed_dim)
        self.last_pad = (0, 0)

    def forward(self, img: torch.Tensor) -> torch.Tensor:
        # img: (B, 3, H, W) -> (B, H/4, W/4, C)
        x, pad_h, pad_w = _pad_grid(img.permute(0, 2, 3, 1), self.patch_size)
        self.last_pad = (pad_h, pad_w)
        x = self.proj(x.permute(0, 3, 1, 2)).permute(0, 2, 3, 1)
        return self.norm(x)


class WindowAttention(nn.Module):
    """窗口内多头自注意力，带可学习的相对位置偏置"""

    def __init__(self, dim: int, window_size: int, num_heads: int, qkv_bias: bool = True):
        super().__init__()
        if num_heads < 1 or dim % num_heads:
            raise ConfigurationError(f"通道数 {dim} 不能被 head 数 {num_heads} 整除")
        self.dim = dim
        self.window_size = window_size
        self.num_heads = num_heads
        self.scale = (dim // num_heads) ** -0.5

        self.relative_position_bias_table = nn.Parameter(
            torch.zeros((2 * window_size - 1) ** 2, num_heads))
        self.qkv = nn.Linear(dim, dim * 3, bias=qkv_bias)
        self.proj = nn.Linear(dim, dim)
        nn.init.trunc_normal_(self.relative_position_bias_table, std=.02)

    def relative_bias(self, window: int) -> torch.Tensor:
        """(heads, N, N) 的相对位置偏置"""
        index = relative_position_index(window, self.window_size).to(self.relative_position_bias_table.device)
        n = window * window
        bias = self.relative_position_bias_table[index.view(-1)].view(n, n, -1)
        return bias.permute(2, 0, 1).contiguous()

    def forward(self, x: torch.Tensor, mask: torch.Tensor = None, return_attn: bool = False):
        # x: (B_, N, C)，N = m*m
        B_, N, C = x.shape
        window = int(round(N ** 0.5))
        qkv = self.qkv(x).reshape(B_, N, 3, self.num_heads, C // self.num_heads).permute(2, 0, 3, 1, 4)
        q, k, v = qkv[0], qkv[1], qkv[2]

        attn = (q * self.scale) @ k.transpose(-2, -1)
        attn = attn + self.relative_bias(window).unsqueeze(0)

        #--------------------------------------------------------#
        #   SW-MSA: 来自不同原始区域的 token 之间加 -inf，softmax 后权重严格为 0
        #--------------------------------------------------------#
        if mask is not None:
            nW = mask.shape[0]
            attn = attn.view(B_ // nW, nW, self.num_heads, N, N) + mask.unsqueeze(1).unsqueeze(0)
            attn = attn.view(-1, self.num_heads, N, N)
        attn = attn.softmax(dim=-1)

        out = (attn @ v).transpose(1, 2).reshape(B_, N, C)
        out = self.proj(out)
        if return_attn:
            return out, attn
        return out


class Mlp(nn.Module):
    def __init__(self, dim: int, hidden: int):
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(hidden, dim)

    def forward(self, x):
        return self.fc2(self.act(self.fc1(x)))


class SwinBlock(nn.Module):
    """
    Swin Transformer Block

    LN -> (S)W-MSA -> 残差；LN -> MLP -> 残差。shift_size > 0 时为 SW-MSA。
    """

    def __init__(self, dim: int, num_heads: int, window_size: int = 7, shift_size: int = 0,
                 mlp_ratio: float = 4.0):
        super().__init__()
        self.dim = dim
        self.window_size = window_size
        self.shift_size = shift_size
        self.norm1 = nn.LayerNorm(dim)
        self.attn = WindowAttention(dim, window_size, num_heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = Mlp(dim, int(dim * mlp_ratio))

    def effective_window(self, H: int, W: int) -> Tuple[int, int]:
        """特征图不大于窗口时窗口收缩为 min(H, W) 且不再平移"""
        if min(H, W) <= self.window_size:
            return min(H, W), 0
        return self.window_size, self.shift_size

    @staticmethod
    def shift_mask(Hp: int, Wp: int, window: int, shift: int,
                   device=None, dtype=torch.float32) -> torch.Tensor:
        """循环平移后各窗口的注意力掩码 (nW, N, N)，同一区域为 0，跨区域为 -inf"""
        img_mask = torch.zeros((1, Hp, Wp, 1), device=device)
        slices = (slice(0, -window), slice(-window, -shift), slice(-shift, None))
        cnt = 0
        for h in slices:
            for w in slices:
                img_mask[:, h, w, :] = cnt
                cnt += 1
        mask_windows = window_partition(img_mask, window).view(-1, window * window)
        diff = mask_windows.unsqueeze(1) - mask_windows.unsqueeze(2)
        mask = torch.zeros(diff.shape, device=device, dtype=dtype)
        return mask.masked_fill(diff != 0, float("-inf"))

    def window_msa(self, x: torch.Tensor) -> torch.Tensor:
        """对已归一化的 (B, H, W, C) 网格做 (S)W-MSA，输出同形状"""
        B, H, W, C = x.shape
        window, shift = self.effective_window(H, W)
        x, _, _ = _pad_grid(x, window)
        Hp, Wp = x.shape[1], x.shape[2]

        mask = None
        if shift > 0:
            x = torch.roll(x, shifts=(-shift, -shift), dims=(1, 2))
            mask = self.shift_mask(Hp, Wp, window, shift, device=x.device, dtype=x.dtype)

        windows = window_partition(x, window).view(-1, window * window, C)
        attn_windows = self.attn(windows, mask=mask).view(-1, window, window, C)
        x = window_reverse(attn_windows, window, Hp, Wp)

        if shift > 0:
            x = torch.roll(x, shifts=(shift, shift), dims=(1, 2))
        return x[:, :H, :W, :]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.window_msa(self.norm1(x))
        x = x + self.mlp(self.norm2(x))
        return x


class SwinStage(nn.Module):
    """一个 stage 的 STB 序列：偶数位 W-MSA，奇数位 SW-MSA（平移 ⌊M/2⌋）"""

    def __init__(self, dim: int, depth: int, num_heads: int, window_size: int, mlp_ratio: float):
        super().__init__()
        self.blocks = nn.ModuleList([
            SwinBlock(dim, num_heads, window_size,
                      shift_size=0 if i % 2 == 0 else window_size // 2,
                      mlp_ratio=mlp_ratio)
            for i in range(depth)
        ])

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for blk in self.blocks:
            x = blk(x)
        return x


def stb_pair(x: torch.Tensor, stage: SwinStage, position: int) -> torch.Tensor:
    """连续的一对 STB（l 为 W-MSA，l+1 为 SW-MSA）"""
    if position % 2 or position + 1 >= len(stage.blocks):
        raise UsageError(f"STB pair 必须从偶数位置开始且完整: position={position}, depth={len(stage.blocks)}")
    return stage.blocks[position + 1](stage.blocks[position](x))


class PatchMerging(nn.Module):
    """2×2 相邻 token 拼接 -> LayerNorm -> 线性映射到 2C"""

    def __init__(self, dim: int):
        super().__init__()
        self.norm = nn.LayerNorm(4 * dim)
        self.reduction = nn.Linear(4 * dim, 2 * dim, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x, _, _ = _pad_grid(x, 2)
        x0 = x[:, 0::2, 0::2, :]
        x1 = x[:, 1::2, 0::2, :]
        x2 = x[:, 0::2, 1::2, :]
        x3 = x[:, 1::2, 1::2, :]
        x = torch.cat([x0, x1, x2, x3], dim=-1)
        return self.reduction(self.norm(x))


class SwinEncoder(nn.Module):
    """patch embed + 4 个 stage，stage 输出经 LayerNorm 后作为 F1..F4"""

    def __init__(self, cfg: CodecConfig):
        super().__init__()
        C = cfg.embed_dim
        self.dims: List[int] = [C * 2 ** s for s in range(4)]
        self.patch_embed = PatchEmbed(cfg.patch_size, 3, C)
        self.stages = nn.ModuleList([
            SwinStage(self.dims[s], cfg.depths[s], cfg.heads[s], cfg.window_size, cfg.mlp_ratio)
            for s in range(4)
        ])
        self.merges = nn.ModuleList([PatchMerging(self.dims[s]) for s in range(3)])
        self.out_norms = nn.ModuleList([nn.LayerNorm(d) for d in self.dims])

    def forward(self, img: torch.Tensor) -> FeaturePyramid:
        x = self.patch_embed(img)
        feats = []
        for s in range(4):
            x = self.stages[s](x)
            feats.append(self.out_norms[s](x).permute(0, 3, 1, 2).contiguous())
            if s < 3:
                x = self.merges[s](x)
        return FeaturePyramid(*feats)
