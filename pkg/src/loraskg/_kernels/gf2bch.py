"""Pure-Python GF(2^m) arithmetic and binary BCH kernels.

This is the reference backend for syndrome computation and syndrome
decoding (Berlekamp-Massey + Chien search).  A Cython twin with the
same two entry points lives in ``_gf2bch_cy.pyx``; backend selection
happens in ``loraskg._kernels``.

Conventions
-----------
Bit vectors are little-endian polynomial coefficient arrays: index i
holds the coefficient of x^i.  Field tables are built over GF(2^m)
with a primitive polynomial given as an integer including the x^m
term (e.g. 0b10001001 for x^7 + x^3 + 1).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def build_gf_tables(m: int, prim_poly: int) -> tuple[np.ndarray, np.ndarray]:
    """Build exp/log tables for GF(2^m).

    Returns
    -------
    exp : int32 array of length 2*(2^m - 1)
        exp[i] = alpha^i, doubled so products of two logs index
        without a modulo.
    log : int32 array of length 2^m
        log[alpha^i] = i; log[0] is unused (set to -1).
    """
    order = (1 << m) - 1
    exp = np.zeros(2 * order, dtype=np.int32)
    log = np.full(1 << m, -1, dtype=np.int32)
    x = 1
    for i in range(order):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & (1 << m):
            x ^= prim_poly
    if x != 1:
        raise ValueError(f"0x{prim_poly:x} is not primitive for GF(2^{m})")
    exp[order:] = exp[:order]
    return exp, log


def syndrome_remainder(bits: np.ndarray, gen: np.ndarray) -> np.ndarray:
    """Remainder of bits(x) modulo the monic generator gen(x) over GF(2).

    ``bits`` has length n, ``gen`` length r+1 with gen[r] = 1; the result
    has length r = deg(gen).
    """
    n = len(bits)
    r = len(gen) - 1
    # Python ints as bit sets: one xor per nonzero top bit.
    acc = 0
    for i in range(n):
        if bits[i]:
            acc |= 1 << i
    g = 0
    for j in range(r + 1):
        if gen[j]:
            g |= 1 << j
    for i in range(n - 1, r - 1, -1):
        if acc >> i & 1:
            acc ^= g << (i - r)
    out = np.zeros(r, dtype=np.uint8)
    for i in range(r):
        if acc >> i & 1:
            out[i] = 1
    return out


def decode_syndrome(
    rem: np.ndarray,
    n: int,
    t: int,
    exp: np.ndarray,
    log: np.ndarray,
) -> np.ndarray | None:
    """Locate the error pattern whose remainder mod g(x) is ``rem``.

    Evaluates the 2t power-sum syndromes from the remainder polynomial,
    runs Berlekamp-Massey for the error locator and a Chien search for
    its roots.  Returns the sorted error positions (possibly empty), or
    None when no pattern of weight <= t is consistent with ``rem``.
    """
    order = len(log) - 1  # 2^m - 1
    exp_l = exp.tolist()
    log_l = log.tolist()

    # Power sums S_j = rem(alpha^j), j = 1..2t.
    nz = [i for i in range(len(rem)) if rem[i]]
    syn = [0] * (2 * t + 1)
    all_zero = True
    for j in range(1, 2 * t + 1):
        s = 0
        for i in nz:
            s ^= exp_l[(i * j) % order]
        syn[j] = s
        if s:
            all_zero = False
    if all_zero:
        return np.empty(0, dtype=np.int64)

    # Berlekamp-Massey over GF(2^m).
    c = [0] * (2 * t + 1)
    b = [0] * (2 * t + 1)
    c[0] = b[0] = 1
    L, shift, bb = 0, 1, 1
    for step in range(2 * t):
        d = syn[step + 1]
        for i in range(1, L + 1):
            if c[i] and syn[step + 1 - i]:
                d ^= exp_l[log_l[c[i]] + log_l[syn[step + 1 - i]]]
        if d == 0:
            shift += 1
        else:
            coef = exp_l[(log_l[d] - log_l[bb]) % order]
            if 2 * L <= step:
                prev = c[:]
                for i in range(0, 2 * t + 1 - shift):
                    if b[i]:
                        c[i + shift] ^= exp_l[log_l[coef] + log_l[b[i]]]
                L = step + 1 - L
                b = prev
                bb = d
                shift = 1
            else:
                for i in range(0, 2 * t + 1 - shift):
                    if b[i]:
                        c[i + shift] ^= exp_l[log_l[coef] + log_l[b[i]]]
                shift += 1
    if L > t:
        return None

    # Chien search: roots alpha^{-i} of the locator mark position i.
    positions = []
    for i in range(n):
        v = c[0]
        for j in range(1, L + 1):
            if c[j]:
                v ^= exp_l[(log_l[c[j]] + (-i * j) % order) % order]
        if v == 0:
            positions.append(i)
    if len(positions) != L:
        return None
    return np.asarray(positions, dtype=np.int64)
