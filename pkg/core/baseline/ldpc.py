"""
准循环 LDPC 编解码

校验矩阵从 config/ldpc/<code>.txt 读取并按扩展因子展开；
编码为系统码 c = [s | p]，译码为批量化的 min-sum / sum-product 置信传播。
"""
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Tuple

import numpy as np
from loguru import logger

from config.settings import LDPC_MATRIX_DIR
from core.errors import ConfigurationError, DataError

# 译码时一次处理的码块数
DECODE_CHUNK = 16
LLR_CLIP = 1e6


@dataclass(frozen=True)
class LdpcCode:
    name: str
    H: np.ndarray           # (m, n) uint8
    z: int
    parity_map: np.ndarray = field(repr=False)  # (m, k) uint8，p = parity_map·s mod 2

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def k(self) -> int:
        return self.n - self.m

    @property
    def rate(self) -> float:
        return self.k / self.n


def parse_base_matrix(text: str) -> Tuple[np.ndarray, int]:
    """解析基矩阵文本，返回 (base, Z)，空块记为 -1"""
    z = None
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "z":
            z = int(tokens[1])
            continue
        rows.append([-1 if t == "-" else int(t) for t in tokens])
    if z is None or not rows:
        raise ConfigurationError("LDPC 基矩阵缺少 z 行或矩阵行")
    if len({len(r) for r in rows}) != 1:
        raise ConfigurationError("LDPC 基矩阵各行列数不一致")
    base = np.array(rows, dtype=np.int64)
    if base.max() >= z:
        raise ConfigurationError(f"循环移位值必须小于 z={z}")
    return base, z


def expand_base_matrix(base: np.ndarray, z: int) -> np.ndarray:
    """块 (i, j) 取值 s 时，块内第 r 行在第 (r + s) mod z 列为 1"""
    mb, nb = base.shape
    H = np.zeros((mb * z, nb * z), dtype=np.uint8)
    r = np.arange(z)
    for i in range(mb):
        for j in range(nb):
            s = base[i, j]
            if s >= 0:
                H[i * z + r, j * z + (r + s) % z] = 1
    return H


def gf2_solve_parity(H: np.ndarray) -> np.ndarray:
    """
    H = [H_s | H_p]，求 parity_map = H_p^{-1}·H_s (GF(2))

    H_p 不可逆时报配置错误。
    """
    m, n = H.shape
    k = n - m
    A = np.concatenate([H[:, k:], H[:, :k]], axis=1).astype(np.uint8)
    for col in range(m):
        pivots = np.flatnonzero(A[col:, col]) + col
        if pivots.size == 0:
            raise ConfigurationError("LDPC 校验部分 H_p 不可逆，无法系统编码")
        p = pivots[0]
        if p != col:
            A[[col, p]] = A[[p, col]]
        rows = np.flatnonzero(A[:, col])
        rows = rows[rows != col]
        A[rows] ^= A[col]
    return A[:, m:].copy()


@lru_cache(maxsize=8)
def load_code(name: str = "wifi_648_r23") -> LdpcCode:
    path = Path(LDPC_MATRIX_DIR) / f"{name}.txt"
    if not path.is_file():
        raise ConfigurationError(f"LDPC 码 '{name}' 不存在: {path}")
    base, z = parse_base_matrix(path.read_text(encoding="utf-8"))
    H = expand_base_matrix(base, z)
    code = LdpcCode(name=name, H=H, z=z, parity_map=gf2_solve_parity(H))
    logger.debug(f"LDPC 码已加载: {name} n={code.n} k={code.k} z={z}")
    return code


def ldpc_encode(info_bits: np.ndarray, code: LdpcCode) -> Tuple[np.ndarray, int]:
    """
    info_bits: 一维比特流，末块不足 k 时补零

    返回 (codewords (n_blocks, n) uint8, pad)
    """
    bits = np.asarray(info_bits, dtype=np.uint8).reshape(-1)
    pad = (-bits.size) % code.k
    if bits.size == 0:
        pad = code.k
    bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)]).reshape(-1, code.k)
    parity = (bits.astype(np.int64) @ code.parity_map.T.astype(np.int64)) % 2
    return np.concatenate([bits, parity.astype(np.uint8)], axis=1), pad


def syndrome(codewords: np.ndarray, code: LdpcCode) -> np.ndarray:
    """(n_blocks, m) 的校验结果，全零表示满足 H·c = 0"""
    return (np.asarray(codewords, dtype=np.int64) @ code.H.T.astype(np.int64)) % 2


def _check_update_min_sum(v2c: np.ndarray, mask: np.ndarray, scale: float) -> np.ndarray:
    mag = np.where(mask, np.abs(v2c), np.inf)
    sign = np.where(mask & (v2c < 0), -1.0, 1.0)
    total_sign = np.prod(sign, axis=2, keepdims=True)

    argmin = np.argmin(mag, axis=2)
    min1 = np.take_along_axis(mag, argmin[..., None], axis=2)
    masked = mag.copy()
    np.put_along_axis(masked, argmin[..., None], np.inf, axis=2)
    min2 = masked.min(axis=2, keepdims=True)

    cols = np.arange(mag.shape[2])
    ext = np.where(cols[None, None, :] == argmin[..., None], min2, min1)
    c2v = scale * total_sign * sign * ext
    return np.where(mask, c2v, 0.0)


def _check_update_sum_product(v2c: np.ndarray, mask: np.ndarray) -> np.ndarray:
    t = np.tanh(np.clip(v2c, -38.0, 38.0) / 2.0)
    t = np.where(np.abs(t) < 1e-12, np.where(t < 0, -1e-12, 1e-12), t)
    t = np.where(mask, t, 1.0)
    ext = np.prod(t, axis=2, keepdims=True) / t
    c2v = 2.0 * np.arctanh(np.clip(ext, -1 + 1e-12, 1 - 1e-12))
    return np.where(mask, c2v, 0.0)


def _decode_chunk(llr: np.ndarray, code: LdpcCode, iters: int, decoder: str, scale: float):
    mask = code.H.astype(bool)[None]
    B = llr.shape[0]
    hard = (llr < 0).astype(np.uint8)
    converged = ~syndrome(hard, code).any(axis=1)
    decided = hard.copy()
    if converged.all() or iters <= 0:
        return decided, converged

    c2v = np.zeros((B,) + code.H.shape)
    active = ~converged
    for _ in range(iters):
        idx = np.flatnonzero(active)
        total = llr[idx] + c2v[idx].sum(axis=1)
        v2c = np.where(mask, total[:, None, :] - c2v[idx], 0.0)
        if decoder == "sum_product":
            c2v[idx] = _check_update_sum_product(v2c, mask)
        else:
            c2v[idx] = _check_update_min_sum(v2c, mask, scale)
        total = llr[idx] + c2v[idx].sum(axis=1)
        bits = (total < 0).astype(np.uint8)
        ok = ~syndrome(bits, code).any(axis=1)
        decided[idx] = bits
        converged[idx[ok]] = True
        active[idx[ok]] = False
        if not active.any():
            break
    return decided, converged


def ldpc_decode(llrs: np.ndarray, code: LdpcCode, iters: int = 50, decoder: str = "min_sum",
                scale: float = 0.8) -> Tuple[np.ndarray, np.ndarray]:
    """
    置信传播译码，LLR > 0 表示比特 0

    llrs: (n_blocks, n)；返回 (信息比特 (n_blocks, k), 收敛标记 (n_blocks,))。
    未收敛只体现在标记里，不抛异常。
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.ndim == 1:
        llrs = llrs.reshape(-1, code.n) if llrs.size % code.n == 0 else llrs
    if llrs.ndim != 2 or llrs.shape[1] != code.n:
        raise DataError(f"LLR 长度必须为码长 {code.n} 的整数倍: {llrs.shape}")
    if decoder not in ("min_sum", "sum_product"):
        raise ConfigurationError(f"未知译码算法: {decoder}")
    llrs = np.clip(llrs, -LLR_CLIP, LLR_CLIP)

    info, flags = [], []
    for start in range(0, llrs.shape[0], DECODE_CHUNK):
        bits, ok = _decode_chunk(llrs[start:start + DECODE_CHUNK], code, iters, decoder, scale)
        info.append(bits[:, :code.k])
        flags.append(ok)
    if not info:
        return np.zeros((0, code.k), dtype=np.uint8), np.zeros(0, dtype=bool)
    return np.concatenate(info), np.concatenate(flags)
