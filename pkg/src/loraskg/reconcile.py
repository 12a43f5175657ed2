"""Information reconciliation over binary primitive BCH codes.

Alice sends the syndrome of her preliminary key block plus a short
verification digest; Bob decodes the syndrome difference to find the
disagreement pattern, flips those bits, and checks the digest.  The
syndrome leaks n-k bits to an eavesdropper, accounted per block.

Codes are primitive binary BCH at n = 2^m - 1.  The generator
polynomial is the product of the minimal polynomials of alpha^1 ..
alpha^2t; the syndrome of a block is its remainder modulo the
generator, which is linear, so the syndrome of the XOR of two blocks
is the XOR of their syndromes.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from functools import lru_cache
from typing import IO

import numpy as np

from . import _kernels
from .bitutil import bits_to_hex, pack_bits
from .pipeline import PreliminaryKey

# x^7 + x^3 + 1, primitive over GF(2); fixes the GF(128) representation.
_PRIM_POLY = {7: 0b10001001}

# (n, k, t) instances available to pick_code, t/n from ~0.05 to ~0.21.
_DEFAULT_TABLE = ((127, 78, 7), (127, 50, 13), (127, 29, 21), (127, 15, 27))

VERIFY_DIGEST_BYTES = 4


@dataclass(frozen=True)
class CodeParams:
    """BCH code instance: length n, dimension k, corrects up to t errors."""

    n: int
    k: int
    t: int
    code_id: str


@dataclass(eq=False)
class ReconcileResult:
    """Outcome of one block reconciliation.

    On success `key` equals Alice's block; on failure the key is
    withheld (None).  leakage_bits counts the syndrome alone; the
    verification digest is reported separately.
    """

    key: np.ndarray | None
    corrected_errors: int | None
    leakage_bits: int
    success: bool


class BchCode:
    """Binary primitive BCH code with syndrome-based decoding."""

    def __init__(self, m: int, t: int, expected_k: int | None = None):
        prim = _PRIM_POLY.get(m)
        if prim is None:
            raise ValueError(f"no primitive polynomial configured for m={m}")
        self._exp, self._log = _kernels.build_gf_tables(m, prim)
        n = (1 << m) - 1
        gen = _generator_poly(t, self._exp, self._log)
        k = n - (len(gen) - 1)
        if expected_k is not None and k != expected_k:
            raise ValueError(f"BCH(n={n}, t={t}) has k={k}, expected {expected_k}")
        self.generator = gen
        self.params = CodeParams(n=n, k=k, t=t, code_id=f"bch({n},{k},{t})")

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def t(self) -> int:
        return self.params.t

    @property
    def code_id(self) -> str:
        return self.params.code_id

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        """Remainder of the block modulo the generator: n-k bits."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.size != self.n:
            raise ValueError(f"block length {bits.size} != code length {self.n}")
        return np.asarray(_kernels.syndrome_remainder(bits, self.generator), dtype=np.uint8)

    def decode_error(self, syndrome_bits: np.ndarray) -> np.ndarray | None:
        """Error positions for a syndrome, or None beyond capability."""
        syndrome_bits = np.asarray(syndrome_bits, dtype=np.uint8)
        if syndrome_bits.size != self.n - self.k:
            raise ValueError(
                f"syndrome length {syndrome_bits.size} != {self.n - self.k}"
            )
        return _kernels.decode_syndrome(syndrome_bits, self.n, self.t, self._exp, self._log)

    def encode(self, message: np.ndarray) -> np.ndarray:
        """Codeword for a k-bit message (non-systematic: m(x)g(x))."""
        message = np.asarray(message, dtype=np.uint8)
        if message.size != self.k:
            raise ValueError(f"message length {message.size} != k={self.k}")
        out = np.zeros(self.n, dtype=np.uint8)
        r = len(self.generator) - 1
        for i in np.flatnonzero(message):
            out[i : i + r + 1] ^= self.generator
        return out


def _generator_poly(t: int, exp: np.ndarray, log: np.ndarray) -> np.ndarray:
    """lcm of minimal polynomials of alpha^1..alpha^2t, as a GF(2) bit vector."""
    order = len(log) - 1
    exp_l, log_l = exp.tolist(), log.tolist()
    g = [1]
    seen: set[int] = set()
    for j in range(1, 2 * t + 1):
        coset: set[int] = set()
        p = j % order
        while p not in coset:
            coset.add(p)
            p = (2 * p) % order
        rep = min(coset)
        if rep in seen:
            continue
        seen.add(rep)
        # Minimal polynomial: product of (x + alpha^c) over the coset.
        mp = [1]
        for c in coset:
            root = exp_l[c]
            new = [0] * (len(mp) + 1)
            for i, a in enumerate(mp):
                if a:
                    new[i + 1] ^= a
                    new[i] ^= exp_l[(log_l[a] + log_l[root]) % order]
            mp = new
        if any(v not in (0, 1) for v in mp):
            raise AssertionError("minimal polynomial not binary")
        new_g = [0] * (len(g) + len(mp) - 1)
        for i, a in enumerate(g):
            if a:
                for idx, b in enumerate(mp):
                    if b:
                        new_g[i + idx] ^= 1
        g = new_g
    return np.array(g, dtype=np.uint8)


@lru_cache(maxsize=None)
def _code(n: int, k: int, t: int) -> BchCode:
    if n != 127:
        raise ValueError(f"unsupported code length {n}")
    return BchCode(m=7, t=t, expected_k=k)


def default_codes() -> tuple[BchCode, ...]:
    """The configured BCH instances, ascending in t."""
    return tuple(_code(n, k, t) for n, k, t in _DEFAULT_TABLE)


def pick_code(max_bdr: float, key_length: int = 128) -> BchCode:
    """Choose the highest-rate configured code covering a BDR cutoff.

    Among codes with t/n >= max_bdr and n <= key_length, returns the
    one with maximal k.

    Raises
    ------
    ValueError
        Cutoff outside (0, 0.25], or no configured code covers it.
    """
    if not 0.0 < max_bdr <= 0.25:
        raise ValueError(f"max_bdr must be in (0, 0.25], got {max_bdr}")
    usable = [
        c for c in default_codes() if c.t / c.n >= max_bdr and c.n <= key_length
    ]
    if not usable:
        raise ValueError(f"no configured code tolerates BDR {max_bdr}")
    return max(usable, key=lambda c: c.k)


def syndrome(block: np.ndarray | PreliminaryKey, code: BchCode) -> np.ndarray:
    """Syndrome of an n-bit block (first n bits of a preliminary key)."""
    bits = block.bits if isinstance(block, PreliminaryKey) else block
    return code.syndrome(np.asarray(bits, dtype=np.uint8)[: code.n])


def verification_digest(bits: np.ndarray) -> bytes:
    """Truncated SHA-256 of a key block, exchanged to confirm equality."""
    return hashlib.sha256(pack_bits(bits)).digest()[:VERIFY_DIGEST_BYTES]


def reconcile(
    bob_key: np.ndarray | PreliminaryKey,
    alice_syndrome: np.ndarray,
    code: BchCode,
    alice_digest: bytes | None = None,
) -> ReconcileResult:
    """Correct Bob's block toward Alice's from her syndrome.

    Decodes e = bob XOR alice from the syndrome difference and flips
    the disagreeing bits.  When `alice_digest` is given, success
    additionally requires the corrected block's digest to match, so a
    miscorrection is reported as failure rather than silently returning
    a wrong key.  Operates on the first n bits of the key.
    """
    bits = bob_key.bits if isinstance(bob_key, PreliminaryKey) else bob_key
    bob = np.asarray(bits, dtype=np.uint8)[: code.n]
    if bob.size != code.n:
        raise ValueError(f"key shorter than code length {code.n}")
    leakage = code.n - code.k
    diff = np.bitwise_xor(code.syndrome(bob), np.asarray(alice_syndrome, dtype=np.uint8))
    positions = code.decode_error(diff)
    if positions is None:
        return ReconcileResult(key=None, corrected_errors=None, leakage_bits=leakage, success=False)
    corrected = bob.copy()
    corrected[positions] ^= 1
    if alice_digest is not None and verification_digest(corrected) != alice_digest:
        return ReconcileResult(key=None, corrected_errors=None, leakage_bits=leakage, success=False)
    return ReconcileResult(
        key=corrected,
        corrected_errors=int(positions.size),
        leakage_bits=leakage,
        success=True,
    )


@dataclass(frozen=True)
class TranscriptRecord:
    """One reconciliation message as seen on the air interface."""

    block_index: int
    code_id: str
    syndrome_hex: str
    verify_digest_hex: str


def write_transcript_csv(records: list[TranscriptRecord], sink: IO[str]) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(("block_index", "code_id", "syndrome_hex", "verify_digest_hex"))
    for rec in records:
        writer.writerow((rec.block_index, rec.code_id, rec.syndrome_hex, rec.verify_digest_hex))


def read_transcript_csv(source: str | IO[str]) -> list[TranscriptRecord]:
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader, None)
    expected = ["block_index", "code_id", "syndrome_hex", "verify_digest_hex"]
    if header is None or [h.strip() for h in header] != expected:
        raise ValueError(f"expected header {','.join(expected)}")
    return [
        TranscriptRecord(int(row[0]), row[1], row[2], row[3])
        for row in reader
        if row
    ]


def transcript_record(
    block_index: int, alice_block: np.ndarray, code: BchCode
) -> tuple[TranscriptRecord, np.ndarray, bytes]:
    """Alice's side of one block: record plus raw syndrome and digest."""
    syn = syndrome(alice_block, code)
    digest = verification_digest(np.asarray(alice_block, dtype=np.uint8)[: code.n])
    rec = TranscriptRecord(
        block_index=block_index,
        code_id=code.code_id,
        syndrome_hex=bits_to_hex(syn),
        verify_digest_hex=digest.hex(),
    )
    return rec, syn, digest
