"""Block pre-processing and quantization into preliminary keys.

Each channel profile (one block of M measurements) is normalized per
block, optionally smoothed by a low-degree polynomial fit, and
quantized at one bit per sample, so a block yields a preliminary key
of L = M bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .trace import ChannelProfile

QUANTIZERS = ("threshold", "difference")


@dataclass(frozen=True)
class QuantizerConfig:
    """Quantizer selection: method plus block geometry.

    bits_per_sample is fixed at 1; key length L = block_size.
    """

    method: str
    bits_per_sample: int = 1
    block_size: int = 128

    def __post_init__(self):
        if self.method not in QUANTIZERS:
            raise ValueError(f"unknown quantizer {self.method!r}")
        if self.bits_per_sample != 1:
            raise ValueError("only 1 bit per sample is supported")
        if self.block_size <= 0:
            raise ValueError("block_size must be positive")

    @property
    def key_length(self) -> int:
        return self.block_size * self.bits_per_sample


@dataclass(eq=False)
class PreliminaryKey:
    """Quantized block: L bits, not yet reconciled."""

    bits: np.ndarray
    party: str
    block_index: int

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 1:
            raise ValueError("key bits must be one-dimensional")
        if not np.all(self.bits <= 1):
            raise ValueError("key bits must be 0/1")


def normalize(profile: ChannelProfile) -> ChannelProfile:
    """Remove the block mean and scale to unit population variance.

    A constant block (population variance exactly 0) maps to the
    all-zero block instead of dividing by zero.
    """
    values = profile.values
    if values.size < 2:
        raise ValueError("block too short to normalize")
    centered = values - values.mean()
    std = values.std()
    out = np.zeros_like(values) if std == 0.0 else centered / std
    return ChannelProfile(values=out, party=profile.party, block_index=profile.block_index)


def enhance(profile: ChannelProfile, degree: int) -> ChannelProfile:
    """Smooth a block by a least-squares polynomial fit over sample index.

    Returns the degree-`degree` fit evaluated at 0..M-1; degree 0 is
    the constant-mean block.  Intended as an optional reciprocity
    enhancement step before quantization.
    """
    m = profile.values.size
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if degree >= m:
        raise ValueError(f"degree {degree} must be below block size {m}")
    x = np.arange(m, dtype=np.float64)
    fit = Polynomial.fit(x, profile.values, deg=degree)
    return ChannelProfile(values=fit(x), party=profile.party, block_index=profile.block_index)


def quantize_threshold(profile: ChannelProfile) -> PreliminaryKey:
    """One bit per sample against the block mean: 1 above, 0 at or below."""
    values = profile.values
    bits = (values > values.mean()).astype(np.uint8)
    return PreliminaryKey(bits=bits, party=profile.party, block_index=profile.block_index)


def quantize_difference(profile: ChannelProfile) -> PreliminaryKey:
    """One bit per sample by comparison with the previous sample.

    bit_k = 1 iff value_k > value_{k-1}; the first bit compares against
    the last sample of the same block (wrap) so the key keeps length M.
    Ties give 0.
    """
    values = profile.values
    bits = (values > np.roll(values, 1)).astype(np.uint8)
    return PreliminaryKey(bits=bits, party=profile.party, block_index=profile.block_index)


def quantize(profile: ChannelProfile, method: str) -> PreliminaryKey:
    """Dispatch to the named quantizer."""
    if method == "threshold":
        return quantize_threshold(profile)
    if method == "difference":
        return quantize_difference(profile)
    raise ValueError(f"unknown quantizer {method!r}")


def bdr(a: PreliminaryKey, b: PreliminaryKey) -> float:
    """Bit disagreement rate: Hamming distance over key length."""
    if a.bits.size != b.bits.size:
        raise ValueError(f"key length mismatch: {a.bits.size} != {b.bits.size}")
    return float(np.count_nonzero(a.bits != b.bits)) / a.bits.size
