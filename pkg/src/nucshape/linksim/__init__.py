"""Coded-link simulation: LDPC codes, soft demapping, BER and waterfall search."""

from .demap import demap_llr, demap_llr_per_axis
from .ldpc import LdpcCode, read_alist, shipped_code, write_alist
from .simulate import (
    BerPoint,
    PassthroughCode,
    WaterfallResult,
    WaterfallSearchError,
    find_waterfall,
    interleaver_permutation,
    simulate_ber,
)

__all__ = [
    "BerPoint",
    "LdpcCode",
    "PassthroughCode",
    "WaterfallResult",
    "WaterfallSearchError",
    "demap_llr",
    "demap_llr_per_axis",
    "find_waterfall",
    "interleaver_permutation",
    "read_alist",
    "shipped_code",
    "simulate_ber",
    "write_alist",
]
