import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neurocrypt.ciphers import DesReducedOracle, Hitag2Oracle, make_reference_oracle
from neurocrypt.dataset import (
    CapacityError,
    DatasetFormatError,
    PairSet,
    TruncatedRecordError,
    generate_pairs,
    read_pairs,
    split_disjoint,
    write_pairs,
)


def test_exhaustive_identity():
    oracle = make_reference_oracle("identity", 4)
    s = generate_pairs(oracle, 16, seed=0)
    assert len(s) == 16 and s.has_unique_inputs()
    assert np.array_equal(s.inputs, s.outputs)
    assert sorted(s.input_keys().tolist()) == list(range(16))


def test_count_zero():
    s = generate_pairs(DesReducedOracle(rounds=1), 0, seed=0)
    assert len(s) == 0 and s.input_bits == 64 and s.output_bits == 64


def test_capacity_error():
    oracle = make_reference_oracle("identity", 4)
    with pytest.raises(CapacityError):
        generate_pairs(oracle, 17, seed=0)
    half = generate_pairs(oracle, 10, seed=0)
    with pytest.raises(CapacityError):
        generate_pairs(oracle, 7, seed=1, exclude=half)
    rest = generate_pairs(oracle, 6, seed=1, exclude=half)
    assert rest.is_disjoint(half) and len(half.concat(rest)) == 16


def test_des_disjoint_from_test_set():
    oracle = DesReducedOracle(rounds=1)
    m2 = generate_pairs(oracle, 1 << 16, seed=3)
    m1 = generate_pairs(oracle, 1 << 16, seed=7, exclude=m2)
    assert len(m1) == 1 << 16 and m1.has_unique_inputs() and m2.has_unique_inputs()
    assert not set(m1.input_keys().tolist()) & set(m2.input_keys().tolist())
    assert np.array_equal(oracle.evaluate_batch(m1.inputs[:100]), m1.outputs[:100])


def test_determinism():
    oracle = Hitag2Oracle()
    a = generate_pairs(oracle, 500, seed=11)
    b = generate_pairs(oracle, 500, seed=11)
    c = generate_pairs(oracle, 500, seed=12)
    assert a == b and a != c
    assert a.input_bits == 48 and a.output_bits == 1


def test_origin_has_no_key():
    oracle = DesReducedOracle("0E329232EA6D0D73", rounds=2)
    s = generate_pairs(oracle, 4, seed=0)
    assert "0E329232EA6D0D73" not in json.dumps(s.origin).upper()


def test_split_disjoint():
    train, test = split_disjoint(make_reference_oracle("random-function", 12, 1), 1000, 500, seed=4)
    assert len(train) == 1000 and len(test) == 500 and train.is_disjoint(test)


def _small_set():
    inputs = np.array([[0, 0, 0, 0, 1, 1, 1, 1], [1, 0, 1, 0, 1, 0, 1, 0], [1, 1, 1, 1, 1, 1, 1, 1]], np.uint8)
    outputs = np.array([[1], [0], [1]], np.uint8)
    return PairSet(inputs, outputs)


@pytest.mark.parametrize("fmt,name", [("binary", "s.ncps"), ("jsonl", "s.jsonl")])
def test_round_trip(tmp_path, fmt, name):
    s = _small_set()
    path = tmp_path / name
    write_pairs(s, path, fmt)
    assert read_pairs(path, fmt) == s
    assert read_pairs(path) == s


def test_jsonl_layout(tmp_path):
    s = PairSet(np.array([[0, 0, 0, 0, 1, 1, 1, 1]], np.uint8), np.array([[1]], np.uint8))
    path = tmp_path / "one.jsonl"
    write_pairs(s, path, "jsonl")
    lines = path.read_text().splitlines()
    assert json.loads(lines[0]) == {"in_bits": 8, "out_bits": 1}
    assert json.loads(lines[1]) == {"in": "0F", "out": "1"}


def test_corrupted_magic(tmp_path):
    path = tmp_path / "bad.ncps"
    write_pairs(_small_set(), path, "binary")
    data = bytearray(path.read_bytes())
    data[0:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(DatasetFormatError):
        read_pairs(path, "binary")


def test_truncated_record(tmp_path):
    path = tmp_path / "cut.ncps"
    write_pairs(_small_set(), path, "binary")
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(TruncatedRecordError):
        read_pairs(path, "binary")


def test_jsonl_bad_header(tmp_path):
    path = tmp_path / "h.jsonl"
    path.write_text('{"in":"00","out":"1"}\n')
    with pytest.raises(DatasetFormatError):
        read_pairs(path)


@given(st.integers(1, 80), st.integers(1, 70), st.integers(0, 30), st.sampled_from(["binary", "jsonl"]))
@settings(max_examples=40, deadline=None)
def test_round_trip_property(tmp_path_factory, m, n, rows, fmt):
    r = np.random.default_rng(m * 7919 + n * 31 + rows)
    s = PairSet(r.integers(0, 2, (rows, m), dtype=np.uint8), r.integers(0, 2, (rows, n), dtype=np.uint8))
    path = tmp_path_factory.mktemp("rt") / ("p.jsonl" if fmt == "jsonl" else "p.ncps")
    write_pairs(s, path, fmt)
    back = read_pairs(path, fmt)
    assert back == s and back.input_bits == m and back.output_bits == n
