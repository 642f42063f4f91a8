"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
from __future__ import annotations

import numpy as np

from neurocrypt.bitcore import rows_to_uint64, uint64_to_rows


def des_encrypt(blocks, subkeys, ip, fp, expansion, pbox, sbox):
    blocks = np.ascontiguousarray(blocks, dtype=np.uint64)
    if len(blocks) == 0:
        return np.empty(0, dtype=np.uint64)
    ip, fp, expansion, pbox = (np.asarray(t, dtype=np.intp) - 1 for t in (ip, fp, expansion, pbox))
    sbox = np.asarray(sbox, dtype=np.uint8)
    keys = uint64_to_rows(np.asarray(subkeys, dtype=np.uint64), 48)
    weights6 = np.array([32, 16, 8, 4, 2, 1], dtype=np.uint8)
    nibble_bits = uint64_to_rows(np.arange(16, dtype=np.uint64), 4)

    x = uint64_to_rows(blocks, 64)[:, ip]
    left, right = x[:, :32], x[:, 32:]
    for key in keys:
        e = right[:, expansion] ^ key
        six = e.reshape(-1, 8, 6) @ weights6
        s_out = sbox[np.arange(8), six]
        f = nibble_bits[s_out].reshape(-1, 32)[:, pbox]
        left, right = right, left ^ f
    preout = np.concatenate([right, left], axis=1)
    return rows_to_uint64(preout[:, fp])


def nibble_filter(states, taps, group_tables, top_table):
    states = np.asarray(states, dtype=np.uint64)
    taps = np.asarray(taps, dtype=np.uint64)
    one = np.uint64(1)
    top = np.zeros(len(states), dtype=np.uint64)
    for g, table in enumerate(np.asarray(group_tables, dtype=np.uint64)):
        idx = np.zeros(len(states), dtype=np.uint64)
        for t in taps[g]:
            idx = (idx << one) | ((states >> t) & one)
        top = (top << one) | ((table >> idx) & one)
    return ((np.uint64(top_table) >> top) & one).astype(np.uint8)


def lfsr_step(states, feedback_mask, width):
    states = np.asarray(states, dtype=np.uint64)
    fb = states & np.uint64(feedback_mask)
    for shift in (32, 16, 8, 4, 2, 1):
        fb ^= fb >> np.uint64(shift)
    return (states >> np.uint64(1)) | ((fb & np.uint64(1)) << np.uint64(width - 1))
