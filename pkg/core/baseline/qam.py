"""
格雷映射方形 QAM 与 max-log 软解调

每个符号 m = log2(order) 比特，前 m/2 比特映射到 I 路，后 m/2 比特映射到 Q 路。
每路比特值 b 先做格雷逆变换得到电平序号 p，幅度为 (L-1-2p)/norm，
norm = sqrt(2(L²-1)/3) 使星座平均能量为 1。4-QAM 时 00 -> (1+j)/√2。
"""
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy.stats import norm

from core.errors import ConfigurationError, DataError

SUPPORTED_ORDERS = (4, 16, 64)


def gray_decode(g: np.ndarray) -> np.ndarray:
    """格雷码 -> 自然二进制"""
    g = np.asarray(g, dtype=np.int64)
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


@lru_cache(maxsize=None)
def axis_levels(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    单路的 (幅度表, 比特表)

    幅度表按比特值 b 索引；比特表 (L, m/2) 给出每个比特值的各比特（高位在前）。
    """
    if order not in SUPPORTED_ORDERS:
        raise ConfigurationError(f"不支持的 QAM 阶数: {order}")
    L = int(round(np.sqrt(order)))
    half = int(np.log2(L))
    values = np.arange(L)
    p = gray_decode(values)
    amplitude = (L - 1 - 2 * p) / np.sqrt(2.0 * (L * L - 1) / 3.0)
    bit_table = ((values[:, None] >> np.arange(half - 1, -1, -1)[None, :]) & 1).astype(np.uint8)
    return amplitude, bit_table


def bits_per_symbol(order: int) -> int:
    return int(np.log2(order))


def constellation(order: int) -> np.ndarray:
    """按符号比特值（I 高位、Q 低位）排列的全部星座点"""
    amplitude, _ = axis_levels(order)
    L = len(amplitude)
    return (amplitude[:, None] + 1j * amplitude[None, :]).reshape(L * L)


def _axis_values(bits: np.ndarray) -> np.ndarray:
    weights = 1 << np.arange(bits.shape[1] - 1, -1, -1)
    return bits.astype(np.int64) @ weights


def qam_modulate(bits: np.ndarray, order: int) -> np.ndarray:
    m = bits_per_symbol(order)
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    if bits.size % m:
        raise DataError(f"比特数 {bits.size} 不能被每符号比特数 {m} 整除")
    amplitude, _ = axis_levels(order)
    groups = bits.reshape(-1, m)
    i_vals = _axis_values(groups[:, :m // 2])
    q_vals = _axis_values(groups[:, m // 2:])
    return amplitude[i_vals] + 1j * amplitude[q_vals]


def _axis_llr(y: np.ndarray, amplitude: np.ndarray, bit_table: np.ndarray, var: np.ndarray) -> np.ndarray:
    # (n, L) 到每个电平的平方距离
    d = (y[:, None] - amplitude[None, :]) ** 2
    llr = np.empty((y.size, bit_table.shape[1]))
    for j in range(bit_table.shape[1]):
        ones = bit_table[:, j] == 1
        d1 = d[:, ones].min(axis=1)
        d0 = d[:, ~ones].min(axis=1)
        llr[:, j] = (d1 - d0) / var
    return llr


def qam_demodulate(symbols: np.ndarray, order: int, sigma2: Union[float, np.ndarray]) -> np.ndarray:
    """
    max-log LLR，LLR > 0 表示比特 0

    sigma2 为复噪声方差，可逐符号给出（ZF 均衡后为 σ²/|h|²）。
    """
    y = np.asarray(symbols, dtype=np.complex128).reshape(-1)
    var = np.broadcast_to(np.maximum(np.asarray(sigma2, dtype=np.float64), 1e-12), y.shape)
    amplitude, bit_table = axis_levels(order)
    llr_i = _axis_llr(y.real, amplitude, bit_table, var)
    llr_q = _axis_llr(y.imag, amplitude, bit_table, var)
    return np.concatenate([llr_i, llr_q], axis=1).reshape(-1)


def hard_decision(llrs: np.ndarray) -> np.ndarray:
    return (np.asarray(llrs) < 0).astype(np.uint8)


def qpsk_ber_theory(ebn0_db: Union[float, np.ndarray]) -> np.ndarray:
    """格雷 4-QAM 在 AWGN 下的理论误比特率 Q(sqrt(2·Eb/N0))"""
    ebn0 = 10.0 ** (np.asarray(ebn0_db, dtype=np.float64) / 10.0)
    return norm.sf(np.sqrt(2.0 * ebn0))


def interleaver_permutation(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n)


def interleave(bits: np.ndarray, seed: int) -> np.ndarray:
    bits = np.asarray(bits).reshape(-1)
    return bits[interleaver_permutation(bits.size, seed)]


def deinterleave(values: np.ndarray, seed: int) -> np.ndarray:
    values = np.asarray(values).reshape(-1)
    out = np.empty_like(values)
    out[interleaver_permutation(values.size, seed)] = values
    return out
