"""Bit streams, their values, and the structural length rules of stream arithmetic.

A stream is an explicit sequence of 0/1 bits; the leftmost bit is processed
first. Its value is the number of ones over the length. Streams are stored
uncompressed so that bit index and time slot coincide.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

MAX_LENGTH = 65_536


class StreamError(ValueError):
    """Raised for malformed streams, values, or unit descriptors."""


class BitStream:
    """Immutable sequence of bits backed by a read-only ``uint8`` array."""

    __slots__ = ("_bits",)

    def __init__(self, bits: Iterable[int] | np.ndarray | str):
        if isinstance(bits, str):
            if not bits or set(bits) - {"0", "1"}:
                raise StreamError(f"invalid stream literal {bits!r}")
            arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
        else:
            arr = np.asarray(bits if isinstance(bits, np.ndarray) else list(bits))
            if arr.ndim != 1:
                raise StreamError("stream must be one-dimensional")
            if arr.size and not np.isin(arr, (0, 1)).all():
                raise StreamError("stream bits must be 0 or 1")
            arr = arr.astype(np.uint8)
        if arr.size < 1:
            raise StreamError("stream length must be >= 1")
        if arr.size > MAX_LENGTH:
            raise StreamError(f"stream length {arr.size} exceeds {MAX_LENGTH}")
        arr = np.array(arr, dtype=np.uint8)
        arr.flags.writeable = False
        self._bits = arr

    @classmethod
    def _trusted(cls, arr: np.ndarray) -> "BitStream":
        # skips validation; callers guarantee a non-empty 0/1 uint8 vector
        obj = cls.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        arr.flags.writeable = False
        obj._bits = arr
        return obj

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def ones(self) -> int:
        return int(self._bits.sum())

    def __len__(self) -> int:
        return int(self._bits.size)

    def __iter__(self):
        return (int(b) for b in self._bits)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return BitStream._trusted(self._bits[idx])
        return int(self._bits[idx])

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitStream):
            return NotImplemented
        return np.array_equal(self._bits, other._bits)

    def __hash__(self) -> int:
        return hash(self._bits.tobytes())

    def __str__(self) -> str:
        return (self._bits + ord("0")).tobytes().decode("ascii")

    def __repr__(self) -> str:
        s = str(self)
        if len(s) > 64:
            s = s[:61] + "..."
        return f"BitStream('{s}')"


@dataclass(frozen=True, order=False)
class StreamValue:
    """Exact value ``k/n`` carried by a stream of length ``n``."""

    k: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise StreamError(f"stream length must be >= 1, got {self.n}")
        if not 0 <= self.k <= self.n:
            raise StreamError(f"count {self.k} outside [0, {self.n}]")

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.k, self.n)

    def __float__(self) -> float:
        return self.k / self.n

    def __str__(self) -> str:
        return f"{self.k}/{self.n}"

    @classmethod
    def parse(cls, text: str) -> "StreamValue":
        try:
            k, n = text.strip().split("/")
            return cls(int(k), int(n))
        except ValueError as exc:
            raise StreamError(f"invalid stream value {text!r}") from exc


class UnitKind(str, enum.Enum):
    AISA = "AISA"
    AISM = "AISM"
    SISA = "SISA"
    SISM = "SISM"
    SCSA = "SCSA"
    SCSM = "SCSM"
    STOCH_AND = "STOCH_AND"
    STOCH_MUX = "STOCH_MUX"


class Accuracy(str, enum.Enum):
    FULLY_ACCURATE = "fully_accurate"
    SEMI_ACCURATE = "semi_accurate"
    STOCHASTIC = "stochastic"


ADDERS = {UnitKind.AISA, UnitKind.SISA, UnitKind.SCSA, UnitKind.STOCH_MUX}


@dataclass(frozen=True)
class UnitDescriptor:
    kind: UnitKind
    input_length: int
    output_length: int
    accuracy: Accuracy
    successive_capable: bool

    def __post_init__(self):
        n, m = self.input_length, self.output_length
        if n < 1 or m < 1:
            raise StreamError("stream lengths must be >= 1")
        if self.accuracy is Accuracy.FULLY_ACCURATE:
            need = 2 * n if self.is_adder else n * n
            if m < need:
                what = "adder" if self.is_adder else "multiplier"
                raise StreamError(
                    f"fully-accurate {what} with n={n} needs output length >= {need}, got {m}"
                )
        if self.successive_capable != (m == n):
            raise StreamError(
                "successive processing is possible exactly when output length equals input length"
            )

    @property
    def is_adder(self) -> bool:
        return self.kind in ADDERS


def value(s: BitStream) -> StreamValue:
    return StreamValue(s.ones, len(s))


def canonical_stream(v: StreamValue) -> BitStream:
    """Ones first, then zeros."""
    arr = np.zeros(v.n, dtype=np.uint8)
    arr[: v.k] = 1
    return BitStream._trusted(arr)


def permute(s: BitStream, perm: Sequence[int]) -> BitStream:
    """Reorder ``s`` so that output bit ``i`` is ``s[perm[i]]``."""
    p = np.asarray(perm)
    n = len(s)
    if p.shape != (n,) or not np.array_equal(np.sort(p), np.arange(n)):
        raise StreamError("perm must be a permutation of 0..len-1")
    return BitStream._trusted(s.bits[p])


def concat_runs(streams: Sequence[BitStream]) -> BitStream:
    if not streams:
        raise StreamError("concat_runs needs at least one stream")
    n = len(streams[0])
    if any(len(s) != n for s in streams):
        raise StreamError("all streams must have the same length")
    return BitStream._trusted(np.concatenate([s.bits for s in streams]))


def require_same_length(*streams: BitStream) -> int:
    n = len(streams[0])
    for s in streams[1:]:
        if len(s) != n:
            raise StreamError(f"length mismatch: {n} vs {len(s)}")
    return n


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0
