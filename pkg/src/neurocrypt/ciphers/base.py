from __future__ import annotations

import hashlib

import numpy as np

from neurocrypt.bitcore import BitBlock, BitLengthError


class ConfigurationError(ValueError):
    """Invalid oracle, network or experiment configuration."""


class CipherOracle:
    """Deterministic black-box map from ``input_bits`` to ``output_bits`` bits.

    Subclasses implement :meth:`evaluate_batch` on ``uint8`` bit matrices;
    single-block evaluation is derived from it.
    """

    name = "oracle"

    def __init__(self, input_bits: int, output_bits: int):
        if input_bits < 1 or output_bits < 1:
            raise ConfigurationError("oracle widths must be positive")
        self.input_bits = input_bits
        self.output_bits = output_bits

    def evaluate_batch(self, inputs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, block: BitBlock) -> BitBlock:
        if block.length != self.input_bits:
            raise BitLengthError(f"{self.name} expects {self.input_bits} input bits, got {block.length}")
        return BitBlock.from_array(self.evaluate_batch(block.to_array()[None, :])[0])

    __call__ = evaluate

    def draw_inputs(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Candidate inputs for dataset generation; uniform random bits by default."""
        nbytes = -(-self.input_bits // 8)
        raw = np.frombuffer(rng.bytes(count * nbytes), dtype=np.uint8).reshape(count, nbytes)
        return np.unpackbits(raw, axis=1)[:, : self.input_bits]

    def params(self) -> dict:
        """Public description for dataset provenance. Never contains key material."""
        return {"input_bits": self.input_bits, "output_bits": self.output_bits}

    def _check_batch(self, inputs: np.ndarray) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=np.uint8)
        if inputs.ndim != 2 or inputs.shape[1] != self.input_bits:
            raise BitLengthError(f"{self.name} expects (count, {self.input_bits}) inputs, got {inputs.shape}")
        return inputs

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


def key_fingerprint(key: bytes) -> str:
    return hashlib.sha256(key).hexdigest()[:16]
