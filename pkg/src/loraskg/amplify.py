"""Randomness testing and privacy amplification of reconciled keys.

Synchronized blocks are only promoted to session keys after passing
two standard randomness tests (monobit and runs), and after enough
reconciled material has accumulated to cover the bits leaked by the
reconciliation transcript.  The final 128-bit key is the truncated
SHA-256 of the accumulated blocks under a fixed context string.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .bitutil import pack_bits, unpack_bits

DEFAULT_ALPHA = 0.01
KEY_BITS = 128
_CONTEXT_PREFIX = b"physec-lorawan-v1"


@dataclass(frozen=True)
class RandomnessReport:
    """Monobit and runs test p-values for one key.

    `advisory` marks reports on keys shorter than 100 bits, below the
    tests' stated validity range.
    """

    monobit_p: float
    runs_p: float
    passed: bool
    advisory: bool = False


@dataclass(eq=False)
class FinalKey:
    """128-bit session key with its provenance and leakage account."""

    bits: np.ndarray
    source_blocks: list[int] = field(default_factory=list)
    leakage_total: int = 0

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.size != KEY_BITS:
            raise ValueError(f"final key must be {KEY_BITS} bits")

    @property
    def hex(self) -> str:
        return pack_bits(self.bits).hex()


def test_randomness(key: np.ndarray, alpha: float = DEFAULT_ALPHA) -> RandomnessReport:
    """Monobit and runs tests on a key.

    Monobit: S = sum(2b-1), p = erfc(|S| / sqrt(2n)).  Runs: with ones
    fraction pi, the pre-test |pi - 0.5| >= 2/sqrt(n) short-circuits to
    p = 0; otherwise V = 1 + number of bit transitions and
    p = erfc(|V - 2n pi (1-pi)| / (2 sqrt(2n) pi (1-pi))).
    Passing requires both p-values >= alpha.
    """
    bits = np.asarray(key, dtype=np.uint8)
    n = bits.size
    if n == 0:
        raise ValueError("empty key")
    ones = int(np.count_nonzero(bits))
    s = 2 * ones - n
    monobit_p = math.erfc(abs(s) / math.sqrt(2 * n))

    pi = ones / n
    # constant keys short enough that the pre-test bound 2/sqrt(n)
    # exceeds 0.5 would otherwise divide by zero below
    if pi in (0.0, 1.0) or abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        runs_p = 0.0
    else:
        v = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
        runs_p = math.erfc(
            abs(v - 2.0 * n * pi * (1.0 - pi))
            / (2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi))
        )
    return RandomnessReport(
        monobit_p=monobit_p,
        runs_p=runs_p,
        passed=monobit_p >= alpha and runs_p >= alpha,
        advisory=n < 100,
    )


def key_context(block_indices: list[int]) -> bytes:
    """Domain-separation context: fixed label plus the source block indices."""
    return _CONTEXT_PREFIX + b"".join(i.to_bytes(4, "big") for i in block_indices)


def amplify(
    blocks: list[np.ndarray] | np.ndarray,
    transcript_leakage: int,
    context: bytes,
    source_blocks: list[int] | None = None,
    check_entropy: bool = True,
) -> FinalKey:
    """Hash reconciled blocks into a 128-bit session key.

    The key is the first 128 bits of SHA-256(context || concatenated
    block bits).  Emission requires the residual entropy estimate
    (total input bits minus transcript_leakage) to reach 128 bits;
    `check_entropy=False` disables the gate for the one-block-per-key
    accounting mode.
    """
    if isinstance(blocks, np.ndarray):
        blocks = [blocks]
    if not blocks:
        raise ValueError("no input blocks")
    bits = np.concatenate([np.asarray(b, dtype=np.uint8) for b in blocks])
    residual = int(bits.size) - transcript_leakage
    if check_entropy and residual < KEY_BITS:
        raise ValueError(
            f"insufficient residual entropy: need >={KEY_BITS}, have {residual}"
        )
    digest = hashlib.sha256(context + pack_bits(bits)).digest()
    return FinalKey(
        bits=unpack_bits(digest[: KEY_BITS // 8], KEY_BITS),
        source_blocks=list(source_blocks) if source_blocks is not None else [],
        leakage_total=transcript_leakage,
    )
