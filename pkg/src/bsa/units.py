"""Registry of arithmetic units: stream function, descriptor, constraints, error bound."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import async_units, stochastic, sync_units
from .stream import (
    Accuracy,
    BitStream,
    StreamValue,
    UnitDescriptor,
    UnitKind,
    canonical_stream,
    is_power_of_two,
    value,
)


@dataclass(frozen=True)
class UnitInfo:
    kind: UnitKind
    fn: Callable[[BitStream, BitStream], BitStream]
    is_adder: bool
    accuracy: Accuracy
    requirement: str = ""  # "", "pow2" or "even"

    def output_length(self, n: int) -> int:
        if self.accuracy is not Accuracy.FULLY_ACCURATE:
            return n
        return 2 * n if self.is_adder else n * n

    def descriptor(self, n: int) -> UnitDescriptor:
        m = self.output_length(n)
        return UnitDescriptor(self.kind, n, m, self.accuracy, m == n)

    def unsupported_reason(self, n: int) -> str | None:
        if n < 1:
            return "n must be >= 1"
        if self.requirement == "pow2" and not (n >= 2 and is_power_of_two(n)):
            return "power-of-two required"
        if self.requirement == "even" and (n < 2 or n % 2):
            return "even n required"
        return None

    def exact(self, k1: int, k2: int, n: int) -> Fraction:
        if self.is_adder:
            return Fraction(k1 + k2, 2 * n)
        return Fraction(k1 * k2, n * n)

    def bound(self, n: int) -> Fraction:
        if self.accuracy is Accuracy.FULLY_ACCURATE:
            return Fraction(0)
        if self.accuracy is Accuracy.SEMI_ACCURATE:
            return Fraction(1, 2 * n)
        return Fraction(1)

    def __call__(self, s1: BitStream, s2: BitStream) -> BitStream:
        return self.fn(s1, s2)


def _stoch_mux(s1: BitStream, s2: BitStream) -> BitStream:
    # fixed half-density select; a seeded generator keeps it reproducible
    rng = np.random.default_rng(len(s1))
    sel = np.zeros(len(s1), dtype=np.uint8)
    sel[rng.permutation(len(s1))[: len(s1) // 2]] = 1
    return stochastic.mux_add(s1, s2, BitStream._trusted(sel))


UNITS: dict[UnitKind, UnitInfo] = {
    u.kind: u
    for u in (
        UnitInfo(UnitKind.AISA, async_units.aisa_add, True, Accuracy.FULLY_ACCURATE),
        UnitInfo(UnitKind.AISM, async_units.aism_multiply, False, Accuracy.FULLY_ACCURATE),
        UnitInfo(UnitKind.SISA, sync_units.sisa_add, True, Accuracy.FULLY_ACCURATE, "pow2"),
        UnitInfo(UnitKind.SISM, sync_units.sism_multiply, False, Accuracy.FULLY_ACCURATE, "pow2"),
        UnitInfo(UnitKind.SCSA, sync_units.scsa_add2, True, Accuracy.SEMI_ACCURATE),
        UnitInfo(UnitKind.SCSM, sync_units.scsm_multiply, False, Accuracy.SEMI_ACCURATE, "even"),
        UnitInfo(UnitKind.STOCH_AND, stochastic.and_multiply, False, Accuracy.STOCHASTIC),
        UnitInfo(UnitKind.STOCH_MUX, _stoch_mux, True, Accuracy.STOCHASTIC),
    )
}

BSC_KINDS = [k for k, u in UNITS.items() if u.accuracy is not Accuracy.STOCHASTIC]


def get_unit(kind: str | UnitKind) -> UnitInfo:
    try:
        return UNITS[UnitKind(str(getattr(kind, "value", kind)).upper())]
    except ValueError:
        valid = ", ".join(k.value for k in UNITS)
        raise ValueError(f"unknown unit {kind!r}; valid: {valid}") from None


def unit_error(unit: UnitInfo, s1: BitStream, s2: BitStream) -> Fraction:
    """Signed error of the unit's output value against exact scaled arithmetic."""
    out = value(unit(s1, s2))
    return out.fraction - unit.exact(s1.ones, s2.ones, len(s1))


def canonical_pair(k1: int, k2: int, n: int) -> tuple[BitStream, BitStream]:
    return canonical_stream(StreamValue(k1, n)), canonical_stream(StreamValue(k2, n))
