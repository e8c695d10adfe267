"""Synchronous units.

Increasing-length and fully accurate: SISA (output ``2n``) and SISM (output
``n**2``). Constant-length and semi-accurate: SCSA and SCSM (output ``n``,
error at most ``0.5/n``), which can process back-to-back input streams.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Sequence

import numpy as np

from .stream import (
    BitStream,
    StreamError,
    StreamValue,
    canonical_stream,
    is_power_of_two,
    require_same_length,
    value,
)


def _require_pow2(n: int) -> None:
    if n < 2 or not is_power_of_two(n):
        raise StreamError(f"power-of-two required (n >= 2), got n={n}")


def _require_even(n: int) -> None:
    if n < 2 or n % 2:
        raise StreamError(f"even stream length required, got n={n}")


# ---------------------------------------------------------------------------
# counter/register to stream conversion


def register_bits(k: int, n: int) -> list[int]:
    """Counter/register contents ``R0..R_log2(n)`` after counting ``k`` ones."""
    width = int(math.log2(n)) + 1
    return [(k >> b) & 1 for b in range(width)]


def mux_expansion(k: int, n: int) -> np.ndarray:
    """Binary-weighted stream of ``k`` ones over ``n`` slots driven by a register.

    Slot 0 carries ``R0``, slot 1 the MSB, slots ``[2**b, 2**(b+1))`` carry
    ``R_b``. Every data input is ORed with the MSB so the full-scale register
    value ``n`` produces all ones.
    """
    _require_pow2(n)
    r = register_bits(k, n)
    msb = r[-1]
    out = np.empty(n, dtype=np.uint8)
    out[0] = r[0] | msb
    out[1] = msb
    for b in range(1, len(r) - 1):
        out[1 << b : 1 << (b + 1)] = r[b] | msb
    return out


def selection_signals(n_slots: int, width: int) -> np.ndarray:
    """Frequency-divider outputs: column ``b`` toggles every ``2**b`` slots."""
    t = np.arange(n_slots)
    return np.stack([(t >> b) & 1 for b in range(width)], axis=1).astype(np.uint8)


# ---------------------------------------------------------------------------
# increasing stream length


def sisa_add(s1: BitStream, s2: BitStream) -> BitStream:
    """Fully-accurate adder: ``s2`` passes during the first ``n`` slots while
    ``s1`` is counted; the latched count is then expanded over the last ``n``."""
    n = require_same_length(s1, s2)
    _require_pow2(n)
    out = np.concatenate([s2.bits, mux_expansion(s1.ones, n)])
    return BitStream._trusted(out)


def sism_multiply(s1: BitStream, s2: BitStream) -> BitStream:
    """Fully-accurate multiplier; slot ``t`` is ``u1[t mod n] & u2[t // n]``.

    Only the input counts survive the counters, so ``u1`` and ``u2`` are
    canonical regenerations of the two values.
    """
    n = require_same_length(s1, s2)
    _require_pow2(n)
    u1 = canonical_stream(value(s1)).bits
    u2 = canonical_stream(value(s2)).bits
    return BitStream._trusted(np.tile(u1, n) & np.repeat(u2, n))


def sism_structural(s1: BitStream, s2: BitStream) -> BitStream:
    """Mux-level SISM model: a fast mux repeats the first register expansion,
    a slow mux holds each bit of the second expansion for ``n`` slots."""
    n = require_same_length(s1, s2)
    _require_pow2(n)
    w = int(math.log2(n))
    sel = selection_signals(n * n, 2 * w)
    fast = sel[:, :w] @ (1 << np.arange(w))
    slow = sel[:, w:] @ (1 << np.arange(w))
    e1, e2 = mux_expansion(s1.ones, n), mux_expansion(s2.ones, n)
    return BitStream._trusted(e1[fast] & e2[slow])


# ---------------------------------------------------------------------------
# constant stream length: adder


@dataclass
class ScsaState:
    """Carry state of the constant-length adder.

    ``fanin == 2`` with ``table=True`` follows the two-input transition table
    (carry is a single bit). Otherwise the generalized form counts input ones,
    adds them to a carry started at ``fanin/2``, and emits 1 whenever the
    carry exceeds ``fanin``. The carry is held doubled so odd fan-ins stay
    integral.
    """

    fanin: int = 2
    table: bool = True
    initial_carry: int = 1
    check: bool = False
    carry2: int = field(init=False)
    consumed: int = field(init=False, default=0)
    emitted: int = field(init=False, default=0)
    bit_index: int = field(init=False, default=0)

    def __post_init__(self):
        if self.fanin < 2:
            raise StreamError("fan-in must be >= 2")
        if self.table and self.fanin != 2:
            raise StreamError("the transition-table form is two-input only")
        if self.table:
            if self.initial_carry not in (0, 1):
                raise StreamError("initial carry must be a bit")
            self.carry2 = 2 * self.initial_carry
        else:
            self.carry2 = self.fanin
        self._carry2_0 = self.carry2

    @property
    def carry(self) -> Fraction | int:
        c = Fraction(self.carry2, 2)
        return int(c) if c.denominator == 1 else c

    def step(self, bits: Sequence[int]) -> int:
        ones = int(sum(bits))
        if self.table:
            c = self.carry2 // 2
            if ones == 0:
                out = 0
            elif ones == 2:
                out = 1
            else:
                out, c = c, 1 - c
            self.carry2 = 2 * c
        else:
            self.carry2 += 2 * ones
            out = 0
            if self.carry2 > 2 * self.fanin:
                out = 1
                self.carry2 -= 2 * self.fanin
        self.consumed += ones
        self.emitted += out
        self.bit_index += 1
        if self.check:
            self.assert_invariants()
        return out

    def assert_invariants(self) -> None:
        i = self.fanin
        if self.table:
            assert self.carry2 in (0, 2), self.carry2
        else:
            assert 0 <= self.carry2 <= 2 * i, self.carry2
        # fan-in * ones_out + (carry - carry_0) == ones_in
        assert 2 * i * self.emitted + self.carry2 - self._carry2_0 == 2 * self.consumed


def scsa_add2(
    s1: BitStream, s2: BitStream, initial_carry: int = 1, check: bool = False
) -> BitStream:
    """Two-input constant-length adder.

    Exact when the two input counts have equal parity, otherwise off by
    exactly ``0.5/n``. With ``initial_carry=1`` odd sums round up.
    """
    require_same_length(s1, s2)
    st = ScsaState(2, True, initial_carry, check)
    out = [st.step((a, b)) for a, b in zip(s1.bits, s2.bits)]
    return BitStream._trusted(np.array(out, dtype=np.uint8))


def scsa_addN(inputs: Sequence[BitStream], check: bool = False) -> BitStream:
    """``i``-input constant-length adder (parallel counter plus carry)."""
    if len(inputs) < 2:
        raise StreamError("need at least two inputs")
    require_same_length(*inputs)
    st = ScsaState(len(inputs), table=False, check=check)
    cols = np.stack([s.bits for s in inputs], axis=1)
    out = [st.step(col) for col in cols]
    return BitStream._trusted(np.array(out, dtype=np.uint8))


def scsa_trace(s1: BitStream, s2: BitStream, initial_carry: int = 1) -> list[dict]:
    require_same_length(s1, s2)
    st = ScsaState(2, True, initial_carry)
    rows = []
    for t, (a, b) in enumerate(zip(s1.bits, s2.bits)):
        out = st.step((a, b))
        rows.append({"step": t, "in1": int(a), "in2": int(b), "carry": int(st.carry), "out": out})
    return rows


# ---------------------------------------------------------------------------
# constant stream length: multiplier


@dataclass
class ScsmState:
    """Carry state for regenerating the multiplicand stream.

    Each step adds the multiplicand count to the carry and emits 1 (subtracting
    ``n``) once the carry reaches ``n/2``, keeping it in ``[-n/2, n/2)``.
    """

    n: int
    k2: int
    carry: int = 0
    check: bool = False
    steps: int = field(init=False, default=0)
    emitted: int = field(init=False, default=0)

    def __post_init__(self):
        _require_even(self.n)
        if not 0 <= self.k2 <= self.n:
            raise StreamError("multiplicand count outside [0, n]")
        self._carry0 = self.carry

    def step(self) -> int:
        self.carry += self.k2
        out = 0
        if self.carry >= self.n // 2:
            out = 1
            self.carry -= self.n
        self.steps += 1
        self.emitted += out
        if self.check:
            self.assert_invariants()
        return out

    def assert_invariants(self) -> None:
        half = self.n // 2
        assert -half <= self.carry < half, self.carry
        assert self.n * self.emitted + self.carry == self._carry0 + self.steps * self.k2


def scsm_regenerate(
    k1: StreamValue, k2: StreamValue, carry: int = 0, check: bool = False
) -> tuple[BitStream, BitStream]:
    """Regenerate both multiplier inputs from their counts.

    The first comes out as ``k1`` ones then zeros; the second is a
    first-order sigma-delta stream of density ``k2/n``.
    """
    if k1.n != k2.n:
        raise StreamError("inputs must have the same length")
    n = k1.n
    _require_even(n)
    reg1 = canonical_stream(k1)
    st = ScsmState(n, k2.k, carry, check)
    reg2 = np.array([st.step() for _ in range(n)], dtype=np.uint8)
    return reg1, BitStream._trusted(reg2)


def scsm_regenerate_table(n: int) -> np.ndarray:
    """Second regenerated stream for every multiplicand count at once, shape ``(n+1, n)``."""
    _require_even(n)
    k2 = np.arange(n + 1)
    carry = np.zeros(n + 1, dtype=np.int64)
    out = np.zeros((n + 1, n), dtype=np.uint8)
    for t in range(n):
        carry += k2
        fire = carry >= n // 2
        out[:, t] = fire
        carry[fire] -= n
    return out


def scsm_product_table(n: int) -> np.ndarray:
    """Output count of the constant-length multiplier for every ``(k1, k2)``."""
    reg2 = scsm_regenerate_table(n)
    prefix = np.concatenate([np.zeros((n + 1, 1), dtype=np.int64), np.cumsum(reg2, axis=1)], axis=1)
    # prefix[k2, k1] = ones of RegIn2 among its first k1 slots
    return prefix.T.copy()


def scsm_multiply(s1: BitStream, s2: BitStream, check: bool = False) -> BitStream:
    n = require_same_length(s1, s2)
    _require_even(n)
    r1, r2 = scsm_regenerate(value(s1), value(s2), check=check)
    return BitStream._trusted(r1.bits & r2.bits)


def scsm_trace(s1: BitStream, s2: BitStream) -> list[dict]:
    n = require_same_length(s1, s2)
    _require_even(n)
    k1 = s1.ones
    st = ScsmState(n, s2.ones)
    rows = []
    for t in range(n):
        r1 = int(t < k1)
        r2 = st.step()
        rows.append({"step": t, "in1": int(s1.bits[t]), "in2": int(s2.bits[t]), "regin1": r1,
                     "regin2": r2, "carry": st.carry, "out": r1 & r2})
    return rows


def write_jsonl(rows: Iterable[dict], fp: IO[str]) -> None:
    for row in rows:
        fp.write(json.dumps(row) + "\n")


class ScsmStream:
    """Back-to-back constant-length multiplication over windows of ``n`` bits.

    Without a reset between windows the regeneration carry is handed on. What
    is handed on is the residual at the last slot where the first regenerated
    stream is 1, so that per-window errors telescope.
    """

    def __init__(self, n: int, check: bool = False):
        _require_even(n)
        self.n = n
        self.carry = 0
        self.check = check

    def process(self, s1: BitStream, s2: BitStream) -> BitStream:
        n = require_same_length(s1, s2)
        if n != self.n:
            raise StreamError(f"window length {n} != {self.n}")
        k1 = s1.ones
        st = ScsmState(n, s2.ones, self.carry, self.check)
        reg2 = np.zeros(n, dtype=np.uint8)
        for t in range(n):
            reg2[t] = st.step()
            if t + 1 == k1:
                residual = st.carry
        if k1 == 0:
            residual = self.carry
        self.carry = residual
        reg1 = np.zeros(n, dtype=np.uint8)
        reg1[:k1] = 1
        return BitStream._trusted(reg1 & reg2)


# ---------------------------------------------------------------------------
# back-to-back input streams


class SuccessiveProcessingError(StreamError):
    pass


@dataclass(frozen=True)
class SuccessiveResult:
    supported: bool
    values: tuple[StreamValue, ...] = ()
    reason: str = ""


INCREASING_KINDS = {"AISA", "AISM", "SISA", "SISM"}


def successive_run(
    unit, batches: Sequence[tuple[BitStream, ...]], strict: bool = False
) -> SuccessiveResult:
    """Feed ``batches`` back to back through one unit without resets.

    ``unit`` is a :class:`~bsa.stream.UnitDescriptor` or a kind name. Units
    whose output is longer than their input cannot keep up with a following
    input set; they yield an unsupported result, or raise when ``strict``.
    """
    kind = getattr(unit, "kind", unit)
    kind = getattr(kind, "value", kind)
    successive = getattr(unit, "successive_capable", kind not in INCREASING_KINDS)
    if not successive or kind in INCREASING_KINDS:
        reason = (
            f"{kind} has output length > input length; successive input streams "
            "need output length equal to input length"
        )
        if strict:
            raise SuccessiveProcessingError(reason)
        return SuccessiveResult(False, (), reason)
    if not batches:
        return SuccessiveResult(True, ())
    n = len(batches[0][0])
    for b in batches:
        require_same_length(*b)
        if len(b[0]) != n:
            raise StreamError("all batches must share one stream length")

    if kind == "SCSA":
        s1 = np.concatenate([b[0].bits for b in batches])
        s2 = np.concatenate([b[1].bits for b in batches])
        out = scsa_add2(BitStream._trusted(s1), BitStream._trusted(s2)).bits
        slices = [out[i * n : (i + 1) * n] for i in range(len(batches))]
    elif kind == "SCSM":
        unit_state = ScsmStream(n)
        slices = [unit_state.process(b[0], b[1]).bits for b in batches]
    else:
        raise StreamError(f"successive_run does not model {kind}")
    return SuccessiveResult(True, tuple(StreamValue(int(s.sum()), n) for s in slices))
