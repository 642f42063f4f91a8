"""Fixed-length bit strings and their hex, byte and feature encodings.

Bit index 0 is the most significant bit of the first hex digit / byte.
Batches of blocks are carried as ``uint8`` matrices of shape ``(count, length)``
holding 0/1 values; :class:`BitBlock` is the single-value form.
"""
from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_BITS = 1024

_HEXDIGITS = frozenset(string.hexdigits)


class BitFormatError(ValueError):
    """Malformed textual or binary bit representation."""


class BitLengthError(ValueError):
    """Bit length out of range or mismatched."""


@dataclass(frozen=True)
class BitBlock:
    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        bits = tuple(int(b) for b in self.bits)
        if not 1 <= len(bits) <= MAX_BITS:
            raise BitLengthError(f"bit length {len(bits)} outside [1, {MAX_BITS}]")
        if any(b not in (0, 1) for b in bits):
            raise BitFormatError("bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @property
    def length(self) -> int:
        return len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __xor__(self, other: "BitBlock") -> "BitBlock":
        return xor(self, other)

    @classmethod
    def zeros(cls, length: int) -> "BitBlock":
        return cls((0,) * length)

    @classmethod
    def ones(cls, length: int) -> "BitBlock":
        return cls((1,) * length)

    @classmethod
    def from_hex(cls, hex_text: str, length: int | None = None) -> "BitBlock":
        if length is None:
            length = 4 * len(hex_text)
        return bits_from_hex(hex_text, length)

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitBlock":
        if value < 0 or value >> length:
            raise BitLengthError(f"{value} does not fit in {length} bits")
        return cls(tuple((value >> (length - 1 - i)) & 1 for i in range(length)))

    @classmethod
    def from_array(cls, row: Sequence[int] | np.ndarray) -> "BitBlock":
        return cls(tuple(int(b) for b in row))

    def to_int(self) -> int:
        value = 0
        for b in self.bits:
            value = (value << 1) | b
        return value

    def to_hex(self) -> str:
        return bits_to_hex(self)

    def to_bytes(self) -> bytes:
        return pack(self)

    def to_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


def bits_from_hex(hex_text: str, length: int) -> BitBlock:
    """First ``length`` bits of the big-endian expansion of ``hex_text``."""
    if not hex_text or any(c not in _HEXDIGITS for c in hex_text):
        raise BitFormatError(f"not a hex string: {hex_text!r}")
    if length < 1:
        raise BitLengthError("length must be positive")
    if 4 * len(hex_text) < length:
        raise BitLengthError(f"{len(hex_text)} hex digits cannot hold {length} bits")
    value = int(hex_text, 16)
    total = 4 * len(hex_text)
    return BitBlock(tuple((value >> (total - 1 - i)) & 1 for i in range(length)))


def bits_to_hex(block: BitBlock) -> str:
    """Uppercase hex, no prefix; trailing bits zero-padded to a whole digit."""
    ndigits = -(-block.length // 4)
    value = block.to_int() << (4 * ndigits - block.length)
    return f"{value:0{ndigits}X}"


def pack(block: BitBlock) -> bytes:
    """MSB-first byte packing; the final byte is zero-padded."""
    return np.packbits(block.to_array()).tobytes()


def unpack(data: bytes, length: int) -> BitBlock:
    if len(data) * 8 < length:
        raise BitLengthError(f"{len(data)} bytes cannot hold {length} bits")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:length]
    return BitBlock.from_array(bits)


def xor(a: BitBlock, b: BitBlock) -> BitBlock:
    if a.length != b.length:
        raise BitLengthError(f"xor of {a.length}-bit and {b.length}-bit blocks")
    return BitBlock(tuple(x ^ y for x, y in zip(a.bits, b.bits)))


def encode_features(block: BitBlock | np.ndarray, signed: bool = False, dtype=np.float64) -> np.ndarray:
    """Map bits to network inputs: 0 -> 0.0 (or -1.0 when ``signed``), 1 -> 1.0.

    Accepts a single block or a bit matrix; the output keeps the input shape.
    """
    bits = block.to_array() if isinstance(block, BitBlock) else np.asarray(block)
    out = bits.astype(dtype)
    if signed:
        out = 2.0 * out - 1.0
    return out


def decode_features(features: np.ndarray, signed: bool = False) -> np.ndarray:
    threshold = 0.0 if signed else 0.5
    return (np.asarray(features) > threshold).astype(np.uint8)


# -- batch helpers -----------------------------------------------------------

def blocks_to_matrix(blocks: Iterable[BitBlock]) -> np.ndarray:
    rows = [b.bits for b in blocks]
    if not rows:
        raise BitLengthError("empty block list has no width")
    if len({len(r) for r in rows}) != 1:
        raise BitLengthError("blocks differ in length")
    return np.array(rows, dtype=np.uint8)


def matrix_to_blocks(bits: np.ndarray) -> list[BitBlock]:
    return [BitBlock.from_array(row) for row in bits]


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """``(count, length)`` bit matrix -> ``(count, ceil(length/8))`` bytes."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), axis=1)


def unpack_rows(packed: np.ndarray, length: int) -> np.ndarray:
    return np.unpackbits(np.asarray(packed, dtype=np.uint8), axis=1)[:, :length]


def rows_to_hex(bits: np.ndarray, align: str = "msb") -> list[str]:
    """Uppercase hex per row.

    ``align="msb"`` matches :func:`bits_to_hex` (bit 0 is the top bit of the
    first digit, trailing padding). ``align="value"`` reads the row as an
    unsigned number and pads on the left, so a 1-bit row ``[1]`` is ``"1"``.
    Both agree whenever the width is a multiple of 4.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    length = bits.shape[1]
    ndigits = -(-length // 4)
    pad = 4 * ndigits - length
    padded = np.zeros((bits.shape[0], 4 * ndigits), dtype=np.uint8)
    if align == "msb":
        padded[:, :length] = bits
    elif align == "value":
        padded[:, pad:] = bits
    else:
        raise ValueError(f"unknown hex alignment {align!r}")
    nibbles = padded.reshape(len(bits), ndigits, 4) @ np.array([8, 4, 2, 1], dtype=np.uint8)
    table = np.array(list("0123456789ABCDEF"))
    return ["".join(r) for r in table[nibbles]]


def hex_to_rows(texts: Sequence[str], length: int, align: str = "msb") -> np.ndarray:
    out = np.zeros((len(texts), length), dtype=np.uint8)
    for i, text in enumerate(texts):
        if align == "msb":
            out[i] = bits_from_hex(text, length).bits
        elif align == "value":
            if not text or any(c not in _HEXDIGITS for c in text):
                raise BitFormatError(f"not a hex string: {text!r}")
            value = int(text, 16)
            if value >> length:
                raise BitLengthError(f"{text} does not fit in {length} bits")
            out[i] = BitBlock.from_int(value, length).bits
        else:
            raise ValueError(f"unknown hex alignment {align!r}")
    return out


def rows_to_uint64(bits: np.ndarray) -> np.ndarray:
    """Rows of <= 64 bits as unsigned integers, bit 0 most significant."""
    bits = np.asarray(bits, dtype=np.uint8)
    length = bits.shape[1]
    if length > 64:
        raise BitLengthError("rows wider than 64 bits do not fit in uint64")
    weights = np.left_shift(np.uint64(1), np.arange(length - 1, -1, -1, dtype=np.uint64))
    return (bits.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)


def uint64_to_rows(values: np.ndarray, length: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.uint64)
    shifts = np.arange(length - 1, -1, -1, dtype=np.uint64)
    return ((values[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
