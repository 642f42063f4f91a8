import numpy as np
import pytest
from hypothesis import given, strategies as st

from neurocrypt.bitcore import (
    BitBlock,
    BitFormatError,
    BitLengthError,
    bits_from_hex,
    bits_to_hex,
    decode_features,
    encode_features,
    hex_to_rows,
    pack,
    pack_rows,
    rows_to_hex,
    rows_to_uint64,
    uint64_to_rows,
    unpack,
    unpack_rows,
    xor,
)

blocks = st.integers(1, 200).flatmap(
    lambda n: st.lists(st.integers(0, 1), min_size=n, max_size=n).map(BitBlock.from_array)
)


@pytest.mark.parametrize(
    "text,length,bits",
    [("0F", 8, [0, 0, 0, 0, 1, 1, 1, 1]), ("00", 8, [0] * 8), ("8", 1, [1]), ("f0", 8, [1, 1, 1, 1, 0, 0, 0, 0])],
)
def test_bits_from_hex(text, length, bits):
    assert list(bits_from_hex(text, length)) == bits


def test_bits_from_hex_errors():
    with pytest.raises(BitFormatError):
        bits_from_hex("0G", 8)
    with pytest.raises(BitLengthError):
        bits_from_hex("F", 8)
    with pytest.raises(BitLengthError):
        BitBlock(())
    with pytest.raises(BitLengthError):
        BitBlock.zeros(1025)


def test_des_worked_example_key():
    b = BitBlock.from_hex("133457799BBCDFF1")
    assert b.length == 64 and b.to_hex() == "133457799BBCDFF1"
    assert b[:8] == (0, 0, 0, 1, 0, 0, 1, 1)


@given(blocks)
def test_hex_round_trip(b):
    assert bits_from_hex(bits_to_hex(b), b.length) == b


@given(blocks)
def test_pack_round_trip(b):
    assert unpack(pack(b), b.length) == b
    assert len(pack(b)) == (b.length + 7) // 8


@given(blocks)
def test_int_round_trip(b):
    assert BitBlock.from_int(b.to_int(), b.length) == b


def test_encode_features_examples():
    assert tuple(encode_features(BitBlock((0, 1)))) == (0.0, 1.0)
    assert tuple(encode_features(BitBlock.zeros(3))) == (0.0, 0.0, 0.0)
    v = encode_features(BitBlock.ones(64))
    assert v.shape == (64,) and np.all(v == 1.0)
    assert tuple(encode_features(BitBlock((0, 1)), signed=True)) == (-1.0, 1.0)


@given(blocks)
def test_encode_decode(b):
    for signed in (False, True):
        assert tuple(decode_features(encode_features(b, signed=signed), signed=signed)) == b.bits


def test_xor_examples():
    assert list(xor(BitBlock((1, 0, 1)), BitBlock((1, 1, 0)))) == [0, 1, 1]
    with pytest.raises(BitLengthError):
        xor(BitBlock((1, 0)), BitBlock((1, 0, 1)))


@given(blocks)
def test_xor_laws(x):
    assert xor(x, x) == BitBlock.zeros(x.length)
    assert xor(x, BitBlock.zeros(x.length)) == x
    assert x ^ x == BitBlock.zeros(x.length)


@given(st.integers(1, 130), st.integers(0, 20))
def test_row_helpers(width, rows):
    r = np.random.default_rng(width * 100 + rows)
    bits = r.integers(0, 2, size=(rows, width), dtype=np.uint8)
    assert np.array_equal(unpack_rows(pack_rows(bits), width), bits)
    for align in ("msb", "value"):
        assert np.array_equal(hex_to_rows(rows_to_hex(bits, align), width, align), bits.reshape(rows, width))


def test_value_aligned_hex():
    assert rows_to_hex(np.array([[1]], dtype=np.uint8), align="value") == ["1"]
    assert rows_to_hex(np.array([[1]], dtype=np.uint8), align="msb") == ["8"]
    assert rows_to_hex(np.array([[0, 0, 0, 0, 1, 1, 1, 1]], dtype=np.uint8), align="value") == ["0F"]


def test_uint64_rows():
    bits = np.zeros((2, 64), dtype=np.uint8)
    bits[0, 0] = 1
    bits[1, 63] = 1
    v = rows_to_uint64(bits)
    assert v.tolist() == [1 << 63, 1]
    assert np.array_equal(uint64_to_rows(v, 64), bits)
