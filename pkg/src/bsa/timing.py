"""Continuous-time view of streams: pulse traces, timing faults, and output metrics.

*Integrity* measures how closely the durations of measured 1-pulses match
the ideal ones; *correctness* measures whether the value recovered from the
pulse durations matches the expected stream value.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np

from .stream import BitStream, StreamValue

log = logging.getLogger(__name__)

_EPS = 1e-12


@dataclass(frozen=True)
class PulseTrace:
    """Alternating ``(level, duration_ns)`` segments starting at t = 0."""

    segments: tuple[tuple[int, float], ...]
    bit_duration: float

    def __post_init__(self):
        if self.bit_duration <= 0:
            raise ValueError("bit_duration must be > 0")
        for i, (lvl, dur) in enumerate(self.segments):
            if lvl not in (0, 1):
                raise ValueError(f"segment {i}: level must be 0 or 1")
            if dur <= 0:
                raise ValueError(f"segment {i}: duration must be > 0")
            if i and self.segments[i - 1][0] == lvl:
                raise ValueError(f"segment {i}: adjacent segments must alternate")

    @property
    def total(self) -> float:
        return sum(d for _, d in self.segments)

    def pulses(self) -> list[tuple[float, float]]:
        """``(start, end)`` of every 1-pulse."""
        out, t = [], 0.0
        for lvl, d in self.segments:
            if lvl:
                out.append((t, t + d))
            t += d
        return out

    def one_durations(self) -> list[float]:
        return [d for lvl, d in self.segments if lvl]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("level", "duration_ns"))
        for lvl, d in self.segments:
            w.writerow((lvl, f"{d:.6g}"))
        return buf.getvalue()


def _from_pulses(pulses: Sequence[tuple[float, float]], total: float, bit_duration: float) -> PulseTrace:
    segs: list[tuple[int, float]] = []
    t = 0.0
    for a, b in pulses:
        if a - t > _EPS:
            segs.append((0, a - t))
        segs.append((1, b - a))
        t = b
    if total - t > _EPS:
        segs.append((0, total - t))
    return PulseTrace(tuple(segs), bit_duration)


def to_trace(s: BitStream, bit_duration: float) -> PulseTrace:
    if bit_duration <= 0:
        raise ValueError("bit_duration must be > 0")
    bits = s.bits
    edges = np.flatnonzero(np.diff(bits)) + 1
    starts = np.concatenate([[0], edges])
    ends = np.concatenate([edges, [bits.size]])
    segs = tuple((int(bits[a]), float((b - a) * bit_duration)) for a, b in zip(starts, ends))
    return PulseTrace(segs, bit_duration)


def pulses_trace(durations: Sequence[float], like: PulseTrace) -> PulseTrace:
    """Trace whose 1-pulses start where ``like``'s do but last ``durations``."""
    starts = [a for a, _ in like.pulses()]
    if len(starts) != len(durations):
        raise ValueError(f"expected {len(starts)} durations, got {len(durations)}")
    pulses = [(a, a + d) for a, d in zip(starts, durations)]
    total = max([like.total] + [b for _, b in pulses])
    return _from_pulses(_merge(pulses, []), total, like.bit_duration)


@dataclass(frozen=True)
class Glitch:
    position: float
    width: float
    level: int


@dataclass(frozen=True)
class FaultModel:
    """Slow processing (``stretch``), spurious glitches, and rise/fall edge skew."""

    stretch: float = 1.0
    glitches: tuple[Glitch, ...] = ()
    rise_delay: float = 0.0
    fall_delay: float = 0.0

    def validate(self, bit_duration: float) -> None:
        if self.stretch < 1.0:
            raise ValueError("stretch factor must be >= 1")
        for g in self.glitches:
            if not 0 < g.width < bit_duration:
                raise ValueError("glitch width must lie in (0, bit_duration)")
            if g.level not in (0, 1):
                raise ValueError("glitch level must be 0 or 1")

    @classmethod
    def random_glitches(
        cls, count: int, total: float, bit_duration: float, seed: int, **kw
    ) -> "FaultModel":
        rng = np.random.default_rng(seed)
        gl = tuple(
            Glitch(float(rng.uniform(0, total)), float(rng.uniform(0.05, 0.5) * bit_duration),
                   int(rng.integers(0, 2)))
            for _ in range(count)
        )
        return cls(glitches=gl, **kw)


@dataclass
class PerturbationLog:
    deleted: list[str] = field(default_factory=list)


def _merge(pulses, plog_deleted):
    merged: list[list[float]] = []
    for a, b in sorted(pulses):
        if merged and a <= merged[-1][1] + _EPS:
            if a >= merged[-1][1] - _EPS:
                plog_deleted.append(f"0-gap before t={a:.4g} collapsed")
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def perturb(
    t: PulseTrace, f: FaultModel, seed: int = 0, plog: PerturbationLog | None = None
) -> PulseTrace:
    """Apply ``f`` to ``t``.

    Outside the trace the signal is 0, so a 1-segment at either end still has
    a rising and a falling edge. Pulses squeezed to zero width are removed and
    recorded in ``plog``. ``seed`` only matters for fault models built with
    randomized glitches; it is accepted for a uniform sweep interface.
    """
    f.validate(t.bit_duration)
    if f == FaultModel():
        return t
    plog = plog if plog is not None else PerturbationLog()
    total = t.total * f.stretch
    pulses = []
    for a, b in t.pulses():
        a2 = max(0.0, a * f.stretch + f.rise_delay)
        b2 = b * f.stretch + f.fall_delay
        if b2 - a2 <= _EPS:
            plog.deleted.append(f"1-pulse at t={a:.4g} collapsed")
            continue
        pulses.append((a2, b2))
    pulses = _merge(pulses, plog.deleted)
    if pulses:
        total = max(total, pulses[-1][1])

    for g in f.glitches:
        lo, hi = g.position, min(g.position + g.width, total)
        if hi <= lo:
            continue
        if g.level == 1:
            pulses = _merge(pulses + [(lo, hi)], [])
        else:
            cut = []
            for a, b in pulses:
                if a < lo:
                    cut.append((a, min(b, lo)))
                if b > hi:
                    cut.append((max(a, hi), b))
            pulses = [(a, b) for a, b in cut if b - a > _EPS]
    if plog.deleted:
        log.debug("perturbation removed segments: %s", plog.deleted)
    return _from_pulses(pulses, total, t.bit_duration)


def integrity(measured: PulseTrace, expected: PulseTrace) -> float:
    """``max(0, 1 - mean relative 1-pulse duration deviation)``, as a percentage.

    Traces with different numbers of 1-pulses score 0.
    """
    m, e = measured.one_durations(), expected.one_durations()
    if len(m) != len(e):
        return 0.0
    if not e:
        return 100.0
    dev = np.mean([abs(a - b) / b for a, b in zip(m, e)])
    return 100.0 * max(0.0, 1.0 - float(dev))


def _round_half_away(x: float) -> int:
    return int(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def correctness(
    measured: PulseTrace, expected_value: StreamValue, bit_duration: float
) -> tuple[StreamValue, float]:
    """Recover the value from pulse durations and score it against ``expected_value``.

    Each 1-pulse counts as ``round(duration / bit_duration)`` ones; the score
    is ``1 - |obtained_k - expected_k| / expected_k`` clamped to [0, 100] %.
    """
    if bit_duration <= 0:
        raise ValueError("bit_duration must be > 0")
    n = expected_value.n
    k = sum(_round_half_away(d / bit_duration) for d in measured.one_durations())
    obtained = StreamValue(min(k, n), n)
    ke = expected_value.k
    if ke == 0:
        return obtained, 100.0 if k == 0 else 0.0
    pct = 100.0 * min(1.0, max(0.0, 1.0 - abs(k - ke) / ke))
    return obtained, pct


def skew_sweep(
    s: BitStream, bit_duration: float, skews: Sequence[float], stretch: float = 1.0
) -> list[dict]:
    """Integrity/correctness as the falling edge lags the rising edge by each skew."""
    expected = to_trace(s, bit_duration)
    ev = StreamValue(s.ones, len(s))
    rows = []
    for sk in skews:
        fm = FaultModel(stretch=stretch, rise_delay=0.0, fall_delay=sk)
        meas = perturb(expected, fm)
        obt, cor = correctness(meas, ev, bit_duration)
        rows.append({"stretch": stretch, "fall_minus_rise_ns": sk,
                     "integrity": integrity(meas, expected), "obtained": str(obt), "correctness": cor})
    return rows
