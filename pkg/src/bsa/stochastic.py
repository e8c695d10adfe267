"""Conventional stochastic-computing baselines.

LFSR number generation, comparator-based stream generation, the AND-gate
multiplier, the 2:1 MUX scaled adder, and Monte-Carlo error statistics for
Bernoulli streams.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .stream import BitStream, StreamError, StreamValue, require_same_length

# Feedback polynomial exponents of known maximal-length (primitive) polynomials.
MAXIMAL_TAPS: dict[int, tuple[int, ...]] = {
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 6, 4, 1),
    13: (13, 4, 3, 1),
    14: (14, 5, 3, 1),
    15: (15, 14),
    16: (16, 15, 13, 4),
}


@dataclass
class Lfsr:
    """Fibonacci LFSR of ``width`` bits; ``state`` must never be zero."""

    width: int
    state: int
    taps: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.taps:
            if self.width not in MAXIMAL_TAPS:
                raise ValueError(f"no built-in maximal polynomial for width {self.width}")
            self.taps = MAXIMAL_TAPS[self.width]
        mask = (1 << self.width) - 1
        if self.state & mask == 0:
            raise ValueError("LFSR state must be non-zero")
        self.state &= mask

    @classmethod
    def for_length(cls, n: int, seed: int = 1) -> "Lfsr":
        width = max(3, math.ceil(math.log2(max(n, 2))))
        period = (1 << width) - 1
        return cls(width, 1 + (seed % period))

    @property
    def period_bound(self) -> int:
        return (1 << self.width) - 1

    def step(self) -> int:
        w = self.width
        fb = 0
        for t in self.taps:
            fb ^= (self.state >> (w - t)) & 1
        self.state = (self.state >> 1) | (fb << (w - 1))
        return self.state


def lfsr_stream(lfsr: Lfsr, length: int) -> list[int]:
    """Return ``length`` successive states, advancing ``lfsr`` in place."""
    if length < 1:
        raise ValueError("length must be >= 1")
    return [lfsr.step() for _ in range(length)]


def lfsr_cycle(width: int, seed: int = 1) -> np.ndarray:
    """One full period of the maximal LFSR of ``width`` bits starting after ``seed``."""
    lf = Lfsr(width, seed)
    return np.array(lfsr_stream(lf, lf.period_bound), dtype=np.int64)


def sng(v: StreamValue, rng: Sequence[int], threshold_scale: int) -> BitStream:
    """Comparator stream generator.

    Bit ``t`` is 1 when ``rng[t] * n <= k * threshold_scale``; with
    ``threshold_scale = 2**w - 1`` and ``rng`` drawn from ``[1, 2**w - 1]``
    this compares against ``k/n`` of the range without rounding drift.
    """
    r = np.asarray(rng, dtype=np.int64)
    if r.size < v.n:
        raise StreamError(f"need {v.n} random numbers, got {r.size}")
    bits = r[: v.n] * v.n <= v.k * threshold_scale
    return BitStream._trusted(bits.astype(np.uint8))


def and_multiply(s1: BitStream, s2: BitStream) -> BitStream:
    require_same_length(s1, s2)
    return BitStream._trusted(s1.bits & s2.bits)


def mux_add(s1: BitStream, s2: BitStream, select: BitStream) -> BitStream:
    require_same_length(s1, s2, select)
    return BitStream._trusted(np.where(select.bits == 1, s2.bits, s1.bits))


def binomial_errors(p: float, n: int) -> tuple[float, float | None]:
    """Closed-form standard error and relative error of a length-``n`` Bernoulli(p) stream.

    The relative error is undefined for ``p == 0`` and returned as ``None``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    std = math.sqrt(p * (1.0 - p) / n)
    rel = None if p == 0 else math.sqrt((1.0 - p) / (p * n))
    return std, rel


@dataclass(frozen=True)
class ErrorStats:
    n: int
    mean_abs_error: float
    std_error: float
    relative_error: float
    trials: int
    seed: int


def bernoulli_stream_values(
    p: float, n: int, trials: int, rng: np.random.Generator, chunk_bits: int = 1 << 22
) -> np.ndarray:
    """Values of ``trials`` independent Bernoulli(p) streams built bit by bit."""
    out = np.empty(trials)
    rows = max(1, chunk_bits // n)
    for lo in range(0, trials, rows):
        hi = min(trials, lo + rows)
        out[lo:hi] = (rng.random((hi - lo, n)) < p).sum(axis=1) / n
    return out


def _and_values(p1, p2, n, trials, rng, chunk_bits=1 << 22):
    out = np.empty(trials)
    rows = max(1, chunk_bits // n)
    for lo in range(0, trials, rows):
        hi = min(trials, lo + rows)
        a = rng.random((hi - lo, n)) < p1
        b = rng.random((hi - lo, n)) < p2
        out[lo:hi] = (a & b).sum(axis=1) / n
    return out


def sweep_point(p1: float, p2: float, n: int, trials: int, seed: int) -> ErrorStats:
    """One AND-multiplier error measurement; the RNG is keyed on ``(seed, n)``."""
    rng = np.random.default_rng([seed, n])
    vals = _and_values(p1, p2, n, trials, rng)
    expected = p1 * p2
    abs_err = np.abs(vals - expected)
    mae = float(abs_err.mean())
    rel = mae / expected if expected > 0 else float("nan")
    return ErrorStats(n, mae, float(vals.std()), rel, trials, seed)


def error_sweep(
    p1: StreamValue | float,
    p2: StreamValue | float,
    n_list: Sequence[int],
    trials: int,
    seed: int = 0,
    op: str = "AND",
    workers: int = 1,
) -> list[ErrorStats]:
    if op != "AND":
        raise ValueError(f"unsupported operation {op!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p1, p2 = float(p1), float(p2)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as ex:
            futs = [ex.submit(sweep_point, p1, p2, n, trials, seed) for n in n_list]
            return [f.result() for f in futs]
    return [sweep_point(p1, p2, n, trials, seed) for n in n_list]


SWEEP_COLUMNS = ("n", "mean_abs_error", "std_error", "relative_error", "trials", "seed")


def sweep_to_csv(stats: Sequence[ErrorStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for s in stats:
        w.writerow([s.n, f"{s.mean_abs_error:.8g}", f"{s.std_error:.8g}",
                    f"{s.relative_error:.8g}", s.trials, s.seed])
    return buf.getvalue()
