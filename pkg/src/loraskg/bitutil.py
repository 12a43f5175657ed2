"""Bit-vector packing helpers shared across the pipeline.

Bit vectors are numpy uint8 arrays of 0/1 values.  Packing is
big-endian within bytes (numpy's default), with zero padding at the
end when the length is not a multiple of 8.
"""

from __future__ import annotations

import numpy as np


def pack_bits(bits: np.ndarray) -> bytes:
    """Pack a 0/1 vector into bytes (big-endian per byte, zero padded)."""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def unpack_bits(data: bytes, count: int) -> np.ndarray:
    """Inverse of pack_bits for a known bit count."""
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=count)
    return bits.astype(np.uint8)


def bits_to_hex(bits: np.ndarray) -> str:
    return pack_bits(bits).hex()


def hex_to_bits(text: str, count: int) -> np.ndarray:
    return unpack_bits(bytes.fromhex(text), count)
