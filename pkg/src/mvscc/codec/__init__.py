"""Encoder/decoder for simulcast, raster-order SCC and tile-order ASCC coding."""

from .config import PRESETS, CodecConfig, Preset, lagrangian
from .decoder import DecodedFrameStats, decode_sequence
from .encoder import EncodeResult, FrameStats, encode, encode_sequence


__all__ = [
    "PRESETS",
    "CodecConfig",
    "DecodedFrameStats",
    "EncodeResult",
    "FrameStats",
    "Preset",
    "decode_sequence",
    "encode",
    "encode_sequence",
    "lagrangian",
]
