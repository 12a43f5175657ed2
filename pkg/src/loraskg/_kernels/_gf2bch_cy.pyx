# cython: language_level=3
"""Compiled GF(2^m)/BCH kernels.

Same contract as the pure-Python module ``gf2bch``: little-endian bit
vectors, exp/log tables built by ``gf2bch.build_gf_tables``.  Only the
two hot entry points are compiled; table and generator construction
stay in Python.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def syndrome_remainder(const unsigned char[::1] bits, const unsigned char[::1] gen):
    """Remainder of bits(x) modulo the monic generator gen(x) over GF(2)."""
    cdef Py_ssize_t n = bits.shape[0]
    cdef Py_ssize_t r = gen.shape[0] - 1
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] work = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] w = work
    cdef Py_ssize_t i, j
    for i in range(n):
        w[i] = bits[i]
    for i in range(n - 1, r - 1, -1):
        if w[i]:
            for j in range(r + 1):
                w[i - r + j] ^= gen[j]
    return work[:r].copy()


def decode_syndrome(const unsigned char[::1] rem,
                    int n,
                    int t,
                    const int[::1] exp,
                    const int[::1] log):
    """Berlekamp-Massey + Chien search on the remainder polynomial.

    Returns sorted error positions as int64, or None on decoder failure.
    """
    cdef int order = log.shape[0] - 1
    cdef int two_t = 2 * t
    cdef Py_ssize_t rlen = rem.shape[0]
    cdef int i, j, step, s, d, L, shift, bb, coef, v

    cdef cnp.ndarray[cnp.int32_t, ndim=1] syn_arr = np.zeros(two_t + 1, dtype=np.int32)
    cdef int[::1] syn = syn_arr
    cdef bint all_zero = True
    for j in range(1, two_t + 1):
        s = 0
        for i in range(rlen):
            if rem[i]:
                s ^= exp[(i * j) % order]
        syn[j] = s
        if s:
            all_zero = False
    if all_zero:
        return np.empty(0, dtype=np.int64)

    cdef cnp.ndarray[cnp.int32_t, ndim=1] c_arr = np.zeros(two_t + 1, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] b_arr = np.zeros(two_t + 1, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] p_arr = np.zeros(two_t + 1, dtype=np.int32)
    cdef int[::1] c = c_arr
    cdef int[::1] b = b_arr
    cdef int[::1] prev = p_arr
    c[0] = 1
    b[0] = 1
    L = 0
    shift = 1
    bb = 1
    for step in range(two_t):
        d = syn[step + 1]
        for i in range(1, L + 1):
            if c[i] and syn[step + 1 - i]:
                d ^= exp[log[c[i]] + log[syn[step + 1 - i]]]
        if d == 0:
            shift += 1
        else:
            coef = exp[(log[d] - log[bb]) % order]
            if 2 * L <= step:
                for i in range(two_t + 1):
                    prev[i] = c[i]
                for i in range(two_t + 1 - shift):
                    if b[i]:
                        c[i + shift] ^= exp[log[coef] + log[b[i]]]
                L = step + 1 - L
                for i in range(two_t + 1):
                    b[i] = prev[i]
                bb = d
                shift = 1
            else:
                for i in range(two_t + 1 - shift):
                    if b[i]:
                        c[i + shift] ^= exp[log[coef] + log[b[i]]]
                shift += 1
    if L > t:
        return None

    cdef cnp.ndarray[cnp.int64_t, ndim=1] pos_arr = np.empty(L if L > 0 else 1, dtype=np.int64)
    cdef cnp.int64_t[::1] pos = pos_arr
    cdef int count = 0
    for i in range(n):
        v = c[0]
        for j in range(1, L + 1):
            if c[j]:
                v ^= exp[(log[c[j]] + (-i * j) % order) % order]
        if v == 0:
            if count == L:
                return None
            pos[count] = i
            count += 1
    if count != L:
        return None
    return pos_arr[:L].copy()
