"""Trivial oracles with known learnability, used as evaluator fixtures."""
from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np

from neurocrypt.bitcore import BitBlock, pack_rows, unpack_rows
from neurocrypt.ciphers.base import CipherOracle, ConfigurationError


class IdentityOracle(CipherOracle):
    name = "identity"

    def __init__(self, bits: int = 8):
        super().__init__(bits, bits)

    def evaluate_batch(self, inputs):
        return self._check_batch(inputs).copy()

    def params(self):
        return {"bits": self.input_bits}


class ConstantOracle(CipherOracle):
    name = "constant"

    def __init__(self, input_bits: int = 4, output_bits: int | None = None, value: BitBlock | None = None):
        output_bits = input_bits if output_bits is None else output_bits
        super().__init__(input_bits, output_bits)
        value = BitBlock.zeros(output_bits) if value is None else value
        if value.length != output_bits:
            raise ConfigurationError("constant value width does not match output_bits")
        self.value = value

    def evaluate_batch(self, inputs):
        inputs = self._check_batch(inputs)
        return np.tile(self.value.to_array(), (len(inputs), 1))

    def params(self):
        return {"input_bits": self.input_bits, "output_bits": self.output_bits, "value": self.value.to_hex()}


class PermutationOracle(CipherOracle):
    """Output bit ``j`` is input bit ``permutation[j]``."""

    name = "permutation"

    def __init__(self, permutation: Sequence[int]):
        perm = [int(p) for p in permutation]
        if sorted(perm) != list(range(len(perm))):
            raise ConfigurationError(f"not a permutation of 0..{len(perm) - 1}: {perm}")
        super().__init__(len(perm), len(perm))
        self.permutation = tuple(perm)

    def evaluate_batch(self, inputs):
        return self._check_batch(inputs)[:, list(self.permutation)]

    def params(self):
        return {"permutation": list(self.permutation)}


class RandomFunctionOracle(CipherOracle):
    """Keyed BLAKE2b of the packed input, truncated to ``output_bits``.

    Deterministic per seed and, for practical purposes, unlearnable.
    """

    name = "random"

    def __init__(self, input_bits: int = 16, output_bits: int = 1, seed: int = 0):
        super().__init__(input_bits, output_bits)
        if output_bits > 512:
            raise ConfigurationError("random-function oracle supports at most 512 output bits")
        self.seed = int(seed)
        self._key = self.seed.to_bytes(16, "little", signed=True)
        self._digest = -(-output_bits // 8)

    def evaluate_batch(self, inputs):
        inputs = self._check_batch(inputs)
        packed = pack_rows(inputs)
        out = np.empty((len(inputs), self._digest), dtype=np.uint8)
        for i, row in enumerate(packed):
            h = hashlib.blake2b(row.tobytes(), digest_size=max(self._digest, 1), key=self._key)
            out[i] = np.frombuffer(h.digest(), dtype=np.uint8)
        return unpack_rows(out, self.output_bits)

    def params(self):
        return {"input_bits": self.input_bits, "output_bits": self.output_bits, "seed": self.seed}


REFERENCE_KINDS = ("identity", "constant", "fixed-permutation", "random-function")


def make_reference_oracle(
    kind: str,
    input_bits: int = 8,
    output_bits: int | None = None,
    seed: int = 0,
    permutation: Sequence[int] | None = None,
) -> CipherOracle:
    if kind == "identity":
        return IdentityOracle(input_bits)
    if kind == "constant":
        return ConstantOracle(input_bits, output_bits)
    if kind == "fixed-permutation":
        if permutation is None:
            permutation = list(range(input_bits))[::-1]
        return PermutationOracle(permutation)
    if kind == "random-function":
        return RandomFunctionOracle(input_bits, 1 if output_bits is None else output_bits, seed)
    raise ConfigurationError(f"unknown reference oracle kind {kind!r}; expected one of {REFERENCE_KINDS}")
