"""Cipher oracles used as black boxes by the evaluator."""
from __future__ import annotations

from neurocrypt.ciphers.base import CipherOracle, ConfigurationError
from neurocrypt.ciphers.des import DEFAULT_KEY, DesReducedOracle, des_encrypt
from neurocrypt.ciphers.hitag2 import Hitag2Oracle, hitag2_filter, hitag2_step
from neurocrypt.ciphers.reference import (
    ConstantOracle,
    IdentityOracle,
    PermutationOracle,
    RandomFunctionOracle,
    make_reference_oracle,
)

CIPHER_NAMES = ("des", "hitag2", "identity", "constant", "permutation", "random")


def make_oracle(name: str, **params) -> CipherOracle:
    """Build an oracle from a config-style name and parameters.

    ``des``: rounds, key (hex); ``hitag2``: mode; ``identity``: bits;
    ``constant``: input_bits, output_bits; ``permutation``: permutation
    (list or comma-separated); ``random``: input_bits, output_bits, seed.
    """
    name = name.lower()
    try:
        if name == "des":
            return DesReducedOracle(key=str(params.get("key", DEFAULT_KEY)), rounds=int(params.get("rounds", 1)))
        if name == "hitag2":
            return Hitag2Oracle(mode=str(params.get("mode", "filter")))
        if name == "identity":
            return IdentityOracle(int(params.get("bits", 8)))
        if name == "constant":
            out = params.get("output_bits")
            return ConstantOracle(int(params.get("input_bits", 4)), None if out is None else int(out))
        if name == "permutation":
            perm = params.get("permutation")
            if isinstance(perm, str):
                perm = [int(p) for p in perm.split(",") if p.strip()]
            if perm is None:
                perm = list(range(int(params.get("bits", 8))))[::-1]
            return PermutationOracle(perm)
        if name == "random":
            return RandomFunctionOracle(
                int(params.get("input_bits", 16)), int(params.get("output_bits", 1)), int(params.get("seed", 0))
            )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad parameters for cipher {name!r}: {exc}") from exc
    raise ConfigurationError(f"unknown cipher {name!r}; expected one of {CIPHER_NAMES}")


__all__ = [
    "CIPHER_NAMES",
    "CipherOracle",
    "ConfigurationError",
    "ConstantOracle",
    "DesReducedOracle",
    "Hitag2Oracle",
    "IdentityOracle",
    "PermutationOracle",
    "RandomFunctionOracle",
    "des_encrypt",
    "hitag2_filter",
    "hitag2_step",
    "make_oracle",
    "make_reference_oracle",
]
