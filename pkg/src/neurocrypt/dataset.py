"""Plaintext/ciphertext pair sets: generation, disjoint splits and file formats.

Sampling uses numpy's PCG64 generator seeded with the integer seed, so a given
``(oracle, count, seed, exclude)`` yields the same set on every platform.

Binary layout (``.ncps``), all integers little-endian::

    b"NCPS" | version u8 = 1 | in_bits u16 | out_bits u16 | count u64
    count x ( ceil(in_bits/8) input bytes | ceil(out_bits/8) output bytes )

Bits are packed MSB-first within each byte and the last byte is zero padded.
JSON lines: a header ``{"in_bits": m, "out_bits": n}`` and then one
``{"in": HEX, "out": HEX}`` object per pair: uppercase hex, no prefix, the
bits read as an unsigned number (a 1-bit output of 1 is ``"1"``).
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from neurocrypt.bitcore import BitBlock, hex_to_rows, pack_rows, rows_to_hex, rows_to_uint64, unpack_rows
from neurocrypt.ciphers.base import CipherOracle

MAGIC = b"NCPS"
VERSION = 1
_HEADER = struct.Struct("<4sBHHQ")

# below this input width the whole space is enumerated instead of rejection sampled
_ENUMERATE_BITS = 20


class CapacityError(ValueError):
    """Not enough distinct inputs left in the oracle's input space."""


class DatasetFormatError(ValueError):
    """Bad magic, version, header or record in a pair-set file."""


class TruncatedRecordError(DatasetFormatError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(eq=False)
class PairSet:
    inputs: np.ndarray
    outputs: np.ndarray
    origin: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.inputs = np.ascontiguousarray(self.inputs, dtype=np.uint8)
        self.outputs = np.ascontiguousarray(self.outputs, dtype=np.uint8)
        if self.inputs.ndim != 2 or self.outputs.ndim != 2:
            raise ValueError("inputs and outputs must be 2-D bit matrices")
        if len(self.inputs) != len(self.outputs):
            raise ValueError("inputs and outputs differ in row count")
        if self.inputs.size and self.inputs.max() > 1 or self.outputs.size and self.outputs.max() > 1:
            raise ValueError("bit matrices may only hold 0 and 1")

    @classmethod
    def empty(cls, input_bits: int, output_bits: int, origin: dict | None = None) -> "PairSet":
        return cls(
            np.zeros((0, input_bits), np.uint8), np.zeros((0, output_bits), np.uint8), dict(origin or {})
        )

    @property
    def input_bits(self) -> int:
        return self.inputs.shape[1]

    @property
    def output_bits(self) -> int:
        return self.outputs.shape[1]

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def pairs(self) -> list[tuple[BitBlock, BitBlock]]:
        return list(iter(self))

    def __iter__(self) -> Iterator[tuple[BitBlock, BitBlock]]:
        for x, y in zip(self.inputs, self.outputs):
            yield BitBlock.from_array(x), BitBlock.from_array(y)

    def __eq__(self, other) -> bool:
        """Same widths and pairs in the same order; ``origin`` is not compared."""
        if not isinstance(other, PairSet):
            return NotImplemented
        return (
            self.inputs.shape == other.inputs.shape
            and self.outputs.shape == other.outputs.shape
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.outputs, other.outputs)
        )

    def input_keys(self) -> np.ndarray:
        return input_keys(self.inputs)

    def has_unique_inputs(self) -> bool:
        keys = self.input_keys()
        return len(np.unique(keys)) == len(keys)

    def is_disjoint(self, other: "PairSet") -> bool:
        return not np.isin(self.input_keys(), other.input_keys()).any()

    def subset(self, index) -> "PairSet":
        return PairSet(self.inputs[index], self.outputs[index], dict(self.origin))

    def concat(self, other: "PairSet") -> "PairSet":
        return PairSet(
            np.concatenate([self.inputs, other.inputs]),
            np.concatenate([self.outputs, other.outputs]),
            dict(self.origin),
        )


def input_keys(bits: np.ndarray) -> np.ndarray:
    """Hashable per-row keys: uint64 for rows up to 64 bits, raw bytes otherwise."""
    if bits.shape[1] <= 64:
        return rows_to_uint64(bits)
    packed = pack_rows(bits)
    return packed.view(np.dtype((np.void, packed.shape[1]))).ravel()


def _first_occurrences(keys: np.ndarray) -> np.ndarray:
    _, idx = np.unique(keys, return_index=True)
    return np.sort(idx)


def generate_pairs(
    oracle: CipherOracle, count: int, seed: int, exclude: PairSet | None = None
) -> PairSet:
    """``count`` pairs with distinct uniformly drawn inputs, none in ``exclude``."""
    m = oracle.input_bits
    if count < 0:
        raise ValueError("count must be non-negative")
    n_excluded = 0 if exclude is None else len(exclude)
    if exclude is not None and exclude.input_bits != m:
        raise ValueError(f"exclude set has {exclude.input_bits}-bit inputs, oracle takes {m}")
    if m < 63 and count + n_excluded > (1 << m):
        raise CapacityError(f"{count} + {n_excluded} pairs exceed the 2^{m} input space")
    origin = {"oracle": oracle.name, "params": oracle.params(), "seed": int(seed), "count": int(count)}
    if count == 0:
        return PairSet.empty(m, oracle.output_bits, origin)

    rng = make_rng(seed)
    excluded = input_keys(np.zeros((0, m), np.uint8)) if exclude is None else exclude.input_keys()
    if m <= _ENUMERATE_BITS and type(oracle).draw_inputs is CipherOracle.draw_inputs:
        inputs = _sample_enumerated(rng, m, count, excluded)
    else:
        inputs = _sample_rejection(oracle, rng, count, excluded)
    return PairSet(inputs, oracle.evaluate_batch(inputs), origin)


def _sample_enumerated(rng, m, count, excluded) -> np.ndarray:
    space = np.arange(1 << m, dtype=np.uint64)
    if len(excluded):
        space = space[~np.isin(space, excluded)]
    chosen = rng.choice(space, size=count, replace=False)
    shifts = np.arange(m - 1, -1, -1, dtype=np.uint64)
    return ((chosen[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)


def _sample_rejection(oracle, rng, count, excluded) -> np.ndarray:
    chunks: list[np.ndarray] = []
    seen = excluded
    have = 0
    stalls = 0
    while have < count:
        need = count - have
        draw = oracle.draw_inputs(rng, need + need // 16 + 16)
        keys = input_keys(draw)
        keep = _first_occurrences(keys)
        keep = keep[~np.isin(keys[keep], seen)][:need]
        if len(keep) == 0:
            stalls += 1
            if stalls > 64:
                raise CapacityError("input sampler keeps producing used inputs; space exhausted")
            continue
        chunks.append(draw[keep])
        seen = np.concatenate([seen, keys[keep]])
        have += len(keep)
    return np.concatenate(chunks)


def split_disjoint(oracle: CipherOracle, train_count: int, test_count: int, seed: int) -> tuple[PairSet, PairSet]:
    """(M1, M2): the test set is drawn first, the training set excludes it."""
    test = generate_pairs(oracle, test_count, seed)
    train = generate_pairs(oracle, train_count, seed + 1, exclude=test)
    return train, test


# -- persistence ---------------------------------------------------------------

FORMATS = ("binary", "jsonl")


def infer_format(path: str | Path) -> str:
    return "jsonl" if str(path).endswith((".jsonl", ".json")) else "binary"


def write_pairs(pairs: PairSet, path: str | Path, format: str | None = None) -> None:
    format = format or infer_format(path)
    path = Path(path)
    if format == "binary":
        header = _HEADER.pack(MAGIC, VERSION, pairs.input_bits, pairs.output_bits, len(pairs))
        records = np.concatenate([pack_rows(pairs.inputs), pack_rows(pairs.outputs)], axis=1)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(records.tobytes())
    elif format == "jsonl":
        with open(path, "w") as fh:
            fh.write(json.dumps({"in_bits": pairs.input_bits, "out_bits": pairs.output_bits}) + "\n")
            for x, y in zip(rows_to_hex(pairs.inputs, "value"), rows_to_hex(pairs.outputs, "value")):
                fh.write(json.dumps({"in": x, "out": y}) + "\n")
    else:
        raise ValueError(f"unknown pair-set format {format!r}; expected one of {FORMATS}")


def read_pairs(path: str | Path, format: str | None = None) -> PairSet:
    format = format or infer_format(path)
    path = Path(path)
    if format == "binary":
        return _read_binary(path)
    if format == "jsonl":
        return _read_jsonl(path)
    raise ValueError(f"unknown pair-set format {format!r}; expected one of {FORMATS}")


def _read_binary(path: Path) -> PairSet:
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise DatasetFormatError(f"{path}: file shorter than the header")
    magic, version, m, n, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version}")
    if m < 1 or n < 1:
        raise DatasetFormatError(f"{path}: invalid widths {m}/{n}")
    in_bytes, out_bytes = -(-m // 8), -(-n // 8)
    body = data[_HEADER.size:]
    record = in_bytes + out_bytes
    if len(body) != count * record:
        raise TruncatedRecordError(f"{path}: expected {count} records of {record} bytes, got {len(body)} bytes")
    records = np.frombuffer(body, dtype=np.uint8).reshape(count, record)
    return PairSet(unpack_rows(records[:, :in_bytes], m), unpack_rows(records[:, in_bytes:], n))


def _read_jsonl(path: Path) -> PairSet:
    with open(path) as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
        m, n = int(header["in_bits"]), int(header["out_bits"])
        rows = [json.loads(line) for line in lines[1:]]
        ins = [r["in"] for r in rows]
        outs = [r["out"] for r in rows]
    except (ValueError, KeyError, TypeError) as exc:
        raise DatasetFormatError(f"{path}: malformed JSON-lines pair set: {exc}") from exc
    if m < 1 or n < 1:
        raise DatasetFormatError(f"{path}: invalid widths {m}/{n}")
    try:
        return PairSet(hex_to_rows(ins, m, "value"), hex_to_rows(outs, n, "value"))
    except ValueError as exc:
        raise DatasetFormatError(f"{path}: {exc}") from exc
