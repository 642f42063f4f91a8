"""Hitag2 keystream generator: 48-bit LFSR plus a two-level nonlinear filter.

State block bit ``i`` is LFSR cell ``i``. One step emits ``filter(state)``
and shifts the register toward cell 0; the feedback bit enters at cell 47.
"""
from __future__ import annotations

import numpy as np

from neurocrypt import kernels
from neurocrypt.bitcore import BitBlock, BitLengthError
from neurocrypt.ciphers.base import CipherOracle, ConfigurationError

STATE_BITS = 48

# 4-input boolean tables: bit ``idx`` of the constant is f(idx)
FA = 0x3C65
FB = 0xEE5
# 5-input output table over the five group results
FC = 0xDD3929B

FILTER_TAPS = (
    (2, 3, 5, 6),
    (8, 12, 14, 15),
    (17, 21, 23, 26),
    (28, 29, 31, 33),
    (34, 43, 44, 46),
)
GROUP_TABLES = (FA, FB, FB, FB, FA)

FEEDBACK_TAPS = (0, 2, 3, 6, 7, 8, 16, 22, 23, 26, 30, 41, 42, 43, 46, 47)
FEEDBACK_MASK = sum(1 << t for t in FEEDBACK_TAPS)

TAP_POSITIONS = tuple(sorted(t for group in FILTER_TAPS for t in group))

_TAPS = np.array(FILTER_TAPS, dtype=np.int32)
_GROUPS = np.array(GROUP_TABLES, dtype=np.uint64)
_CELL_WEIGHTS = np.left_shift(np.uint64(1), np.arange(STATE_BITS, dtype=np.uint64))


def states_to_ints(bits: np.ndarray) -> np.ndarray:
    """Bit matrix (cell order) -> integers with cell ``i`` at bit ``i``."""
    bits = np.asarray(bits, dtype=np.uint8)
    return (bits.astype(np.uint64) * _CELL_WEIGHTS).sum(axis=1, dtype=np.uint64)


def ints_to_states(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.uint64)
    return ((values[:, None] >> np.arange(STATE_BITS, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)


def filter_ints(states: np.ndarray, backend=None) -> np.ndarray:
    impl = backend or kernels
    return impl.nibble_filter(np.ascontiguousarray(states, dtype=np.uint64), _TAPS, _GROUPS, FC)


def step_ints(states: np.ndarray, backend=None) -> np.ndarray:
    impl = backend or kernels
    return impl.lfsr_step(np.ascontiguousarray(states, dtype=np.uint64), FEEDBACK_MASK, STATE_BITS)


def _check_state(state: BitBlock) -> None:
    if state.length != STATE_BITS:
        raise BitLengthError(f"Hitag2 state is {STATE_BITS} bits, got {state.length}")


def hitag2_filter(state: BitBlock) -> int:
    _check_state(state)
    return int(filter_ints(states_to_ints(state.to_array()[None, :]))[0])


def hitag2_step(state: BitBlock) -> tuple[BitBlock, int]:
    """(successor state, output bit of the current state)."""
    _check_state(state)
    value = states_to_ints(state.to_array()[None, :])
    out_bit = int(filter_ints(value)[0])
    nxt = ints_to_states(step_ints(value))[0]
    return BitBlock.from_array(nxt), out_bit


class Hitag2Oracle(CipherOracle):
    """48-bit state -> 1 keystream bit.

    ``mode="filter"`` draws dataset inputs as independent uniform states;
    ``mode="keystream-step"`` draws them as successive states of one LFSR run
    from a random start, which is what an eavesdropper on a keystream sees.
    """

    name = "hitag2"
    MODES = ("filter", "keystream-step")

    def __init__(self, mode: str = "filter"):
        super().__init__(STATE_BITS, 1)
        if mode not in self.MODES:
            raise ConfigurationError(f"unknown Hitag2 mode {mode!r}; expected one of {self.MODES}")
        self.mode = mode

    def evaluate_batch(self, inputs: np.ndarray) -> np.ndarray:
        inputs = self._check_batch(inputs)
        return filter_ints(states_to_ints(inputs))[:, None]

    def step(self, state: BitBlock) -> tuple[BitBlock, int]:
        return hitag2_step(state)

    def draw_inputs(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.mode == "filter":
            return super().draw_inputs(rng, count)
        current = int(states_to_ints(super().draw_inputs(rng, 1))[0])
        states = np.empty(count, dtype=np.uint64)
        for i in range(count):
            states[i] = current
            feedback = (current & FEEDBACK_MASK).bit_count() & 1
            current = (current >> 1) | (feedback << (STATE_BITS - 1))
        return ints_to_states(states)

    def params(self) -> dict:
        return {"mode": self.mode}
