# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch kernels for the cipher oracles.

Same signatures and results as :mod:`neurocrypt._fallback`.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, uint8_t, int32_t

cnp.import_array()


cdef inline uint64_t _permute(uint64_t x, const int32_t* table, int n_out, int in_bits) nogil:
    cdef uint64_t out = 0
    cdef int i
    for i in range(n_out):
        out = (out << 1) | ((x >> (in_bits - table[i])) & 1)
    return out


def des_encrypt(const uint64_t[::1] blocks, const uint64_t[::1] subkeys,
                const int32_t[::1] ip, const int32_t[::1] fp,
                const int32_t[::1] expansion, const int32_t[::1] pbox,
                const uint8_t[:, ::1] sbox):
    """IP, one Feistel round per subkey, half swap, FP.

    ``sbox[box, six_bits]`` is the 4-bit output for the 6-bit input read
    MSB-first, i.e. the row/column split is already folded into the table.
    """
    cdef Py_ssize_t n = blocks.shape[0], i
    cdef int r, box, rounds = subkeys.shape[0]
    cdef uint64_t x, left, right, e, f, tmp
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] res = out
    with nogil:
        for i in range(n):
            x = _permute(blocks[i], &ip[0], 64, 64)
            left = x >> 32
            right = x & <uint64_t>0xFFFFFFFF
            for r in range(rounds):
                e = _permute(right, &expansion[0], 48, 32) ^ subkeys[r]
                f = 0
                for box in range(8):
                    f = (f << 4) | sbox[box, (e >> (42 - 6 * box)) & 0x3F]
                f = _permute(f, &pbox[0], 32, 32)
                tmp = right
                right = left ^ f
                left = tmp
            res[i] = _permute((right << 32) | left, &fp[0], 64, 64)
    return out


def nibble_filter(const uint64_t[::1] states, const int32_t[:, ::1] taps,
                  const uint64_t[::1] group_tables, uint64_t top_table):
    """Two-level boolean filter: 4-bit lookups per tap group, then a final lookup.

    Tap positions index integer bits (bit 0 = least significant). The first
    listed tap of a group is the most significant bit of its 4-bit index and
    group 0 is the most significant bit of the final index.
    """
    cdef Py_ssize_t n = states.shape[0], i
    cdef int g, k, n_groups = taps.shape[0]
    cdef uint64_t s, idx, top
    out = np.empty(n, dtype=np.uint8)
    cdef uint8_t[::1] res = out
    with nogil:
        for i in range(n):
            s = states[i]
            top = 0
            for g in range(n_groups):
                idx = 0
                for k in range(4):
                    idx = (idx << 1) | ((s >> taps[g, k]) & 1)
                top = (top << 1) | ((group_tables[g] >> idx) & 1)
            res[i] = (top_table >> top) & 1
    return out


def lfsr_step(const uint64_t[::1] states, uint64_t feedback_mask, int width):
    """Shift right by one; the parity of ``state & feedback_mask`` enters at the top."""
    cdef Py_ssize_t n = states.shape[0], i
    cdef uint64_t s, fb
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] res = out
    with nogil:
        for i in range(n):
            s = states[i]
            fb = s & feedback_mask
            fb ^= fb >> 32
            fb ^= fb >> 16
            fb ^= fb >> 8
            fb ^= fb >> 4
            fb ^= fb >> 2
            fb ^= fb >> 1
            res[i] = (s >> 1) | ((fb & 1) << (width - 1))
    return out
