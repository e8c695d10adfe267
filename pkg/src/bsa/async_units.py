"""Asynchronous increasing-length units: delay-line adder (AISA) and multiplier (AISM).

Delays are ideal integer bit-slot shifts. The multiplier ANDs every ordered
bit pair of its inputs in exactly one output slot; its 2n-1 AND gates each
cover one diagonal of the n x n product matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .stream import BitStream, StreamError, require_same_length


def aisa_add(s1: BitStream, s2: BitStream) -> BitStream:
    """OR of ``s1`` and ``s2`` delayed by ``n`` slots; output length ``2n``."""
    n = require_same_length(s1, s2)
    first = np.concatenate([s1.bits, np.zeros(n, dtype=np.uint8)])
    delayed = np.concatenate([np.zeros(n, dtype=np.uint8), s2.bits])
    return BitStream._trusted(first | delayed)


@dataclass(frozen=True)
class DelaySchedule:
    """Incremental delay (in bits) between consecutive AND gates, per input."""

    n: int
    input1_deltas: tuple[int, ...]
    input2_deltas: tuple[int, ...]

    @property
    def gate_count(self) -> int:
        return len(self.input1_deltas)

    @property
    def input1_offsets(self) -> np.ndarray:
        return np.cumsum(self.input1_deltas)

    @property
    def input2_offsets(self) -> np.ndarray:
        return np.cumsum(self.input2_deltas)

    @property
    def input1_total(self) -> int:
        return sum(self.input1_deltas)

    @property
    def input2_total(self) -> int:
        return sum(self.input2_deltas)

    def to_json(self) -> str:
        gates = [
            {"gate": g + 1, "input1_delta": d1, "input2_delta": d2}
            for g, (d1, d2) in enumerate(zip(self.input1_deltas, self.input2_deltas))
        ]
        return json.dumps({"n": self.n, "gate_count": self.gate_count, "gates": gates}, indent=2)


def aism_schedule(n: int) -> DelaySchedule:
    if n < 2:
        raise StreamError("the delay schedule needs n >= 2")
    d1, d2 = [0], [0]
    for i in range(2, 2 * n):
        if i <= n:
            d1.append(n - (i - 1))
            d2.append(n - (i - 2))
        elif i == n + 1:
            d1.append(n)
            # negative: this gate taps Input-2 earlier than the previous one
            d2.append(-(n - 2))
        else:
            d1.append(i - (n + 1))
            d2.append(i - n)
    return DelaySchedule(n, tuple(d1), tuple(d2))


def gate_diagonals(n: int) -> list[int]:
    """Diagonal ``i - j`` covered by each gate, in gate order."""
    return [0] + list(range(1, n)) + list(range(-(n - 1), 0))


def diagonal_slot_map(n: int) -> np.ndarray:
    """Slot map by direct enumeration: row ``t`` holds the pair ``(i, j)`` ANDed in slot ``t``."""
    pairs = []
    for d in gate_diagonals(n):
        for i in range(max(0, d), min(n, n + d)):
            pairs.append((i, i - d))
    return np.array(pairs, dtype=np.int64)


def schedule_slot_map(sched: DelaySchedule) -> dict[int, list[tuple[int, int]]]:
    """Slot map by time simulation of the delay lines.

    Gate ``g`` sees ``s1[t - D1_g]`` and ``s2[t - D2_g]`` at time ``t`` where
    ``D*_g`` are cumulative offsets from a common origin.
    """
    n = sched.n
    hosted: dict[int, list[tuple[int, int]]] = {}
    for off1, off2 in zip(sched.input1_offsets, sched.input2_offsets):
        lo = max(off1, off2)
        hi = min(off1, off2) + n
        for t in range(int(lo), int(hi)):
            hosted.setdefault(t, []).append((int(t - off1), int(t - off2)))
    return hosted


def _aism_diagonal(s1: BitStream, s2: BitStream) -> np.ndarray:
    pairs = diagonal_slot_map(len(s1))
    return s1.bits[pairs[:, 0]] & s2.bits[pairs[:, 1]]


def _aism_timed(s1: BitStream, s2: BitStream, sched: DelaySchedule) -> np.ndarray:
    n = len(s1)
    out = np.zeros(n * n, dtype=np.uint8)
    b1, b2 = s1.bits, s2.bits
    for off1, off2 in zip(sched.input1_offsets, sched.input2_offsets):
        lo, hi = max(off1, off2), min(off1, off2) + n
        t = np.arange(lo, hi)
        out[t] |= b1[t - off1] & b2[t - off2]
    return out


def aism_multiply(s1: BitStream, s2: BitStream, method: str = "diagonal") -> BitStream:
    """Fully-accurate multiplier, output length ``n**2``.

    ``method="diagonal"`` enumerates the product-matrix diagonals directly;
    ``method="timed"`` simulates the delay lines driven by :func:`aism_schedule`.
    """
    n = require_same_length(s1, s2)
    if n == 1:
        return BitStream._trusted(s1.bits & s2.bits)
    if method == "diagonal":
        return BitStream._trusted(_aism_diagonal(s1, s2))
    if method == "timed":
        return BitStream._trusted(_aism_timed(s1, s2, aism_schedule(n)))
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class InverterBudget:
    required_outputs: int
    inverter_count: int
    per_block: tuple[int, ...] = ()


def _even_above(x: int) -> int:
    return x + 1 if x % 2 else x + 2


def _even_at_least(x: int) -> int:
    return x + (x % 2)


def inverter_budget(kind: str, n: int) -> InverterBudget:
    """Inverter count for the delay lines of an asynchronous unit.

    Counts are even so the delay line does not invert the signal. The adder
    needs more than ``n`` outputs; the multiplier more than ``n**2 - n``,
    realised block by block from the delay schedule.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == "adder":
        return InverterBudget(n, _even_above(n))
    if kind == "multiplier":
        if n == 1:
            return InverterBudget(0, 0)
        sched = aism_schedule(n)
        blocks = tuple(
            _even_at_least(abs(d))
            for d in sched.input1_deltas + sched.input2_deltas
            if d != 0
        )
        return InverterBudget(n * n - n, sum(blocks), blocks)
    raise ValueError(f"kind must be 'adder' or 'multiplier', got {kind!r}")
