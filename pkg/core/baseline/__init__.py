"""
传统 JPEG + LDPC + QAM 对比链路
"""
from .jpeg import jpeg_decode, jpeg_encode, jpeg_round, raw_size, search_jpeg_quality
from .ldpc import LdpcCode, expand_base_matrix, ldpc_decode, ldpc_encode, load_code, parse_base_matrix, syndrome
from .pipeline import BaselineStats, run_baseline, run_baseline_reference, segment_image, transmit_bits
from .qam import (
    constellation,
    deinterleave,
    hard_decision,
    interleave,
    qam_demodulate,
    qam_modulate,
    qpsk_ber_theory,
)

__all__ = [
    'jpeg_decode',
    'jpeg_encode',
    'jpeg_round',
    'raw_size',
    'search_jpeg_quality',
    'LdpcCode',
    'expand_base_matrix',
    'ldpc_decode',
    'ldpc_encode',
    'load_code',
    'parse_base_matrix',
    'syndrome',
    'BaselineStats',
    'run_baseline',
    'run_baseline_reference',
    'segment_image',
    'transmit_bits',
    'constellation',
    'deinterleave',
    'hard_decision',
    'interleave',
    'qam_demodulate',
    'qam_modulate',
    'qpsk_ber_theory',
]
