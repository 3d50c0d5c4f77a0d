"""Bit-accurate simulator for a compressor-based streaming Sobel edge detector."""

from .carrysave import (
    BitWord,
    ContractViolation,
    CsPair,
    compress_4_2,
    lookahead_add,
    p2pp_compress,
    ppn_compress,
    ripple_add,
)
from .datapath import EdgeImage, PixelCache, Variant, process_frame, process_stream
from .golden import EdgeParams, Norm, convolve2d, op_count, separable_convolve, sobel_golden

__version__ = "0.1.0"
