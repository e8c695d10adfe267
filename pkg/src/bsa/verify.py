"""Exhaustive error verification of the stream units against exact arithmetic."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .stream import Accuracy, BitStream, StreamValue, UnitKind, canonical_stream, permute, value
from .units import BSC_KINDS, UNITS, get_unit


@dataclass
class CheckRow:
    unit: str
    n: int
    status: str  # ok | violation | skipped
    max_error: float
    bound: float
    pairs: int
    orderings: int
    reason: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def random_stream(k: int, n: int, rng: np.random.Generator) -> BitStream:
    return permute(canonical_stream(StreamValue(k, n)), rng.permutation(n))


def check_unit(kind, n: int, orderings: int = 0, seed: int = 0) -> CheckRow:
    """All ``(k1, k2)`` pairs on canonical streams plus ``orderings`` random bit orders each.

    The semi-accurate adder must also be exact whenever ``k1`` and ``k2`` have
    the same parity.
    """
    unit = get_unit(kind)
    reason = unit.unsupported_reason(n)
    bound = unit.bound(n)
    if reason:
        return CheckRow(unit.kind.value, n, "skipped", 0.0, float(bound), 0, orderings, reason)
    if unit.accuracy is Accuracy.STOCHASTIC:
        return CheckRow(unit.kind.value, n, "skipped", 0.0, float(bound), 0, orderings,
                        "stochastic unit has no deterministic bound")
    rng = np.random.default_rng([seed, n, list(UNITS).index(unit.kind)])
    worst = Fraction(0)
    bad = []
    for k1 in range(n + 1):
        for k2 in range(n + 1):
            exact = unit.exact(k1, k2, n)
            pairs = [(canonical_stream(StreamValue(k1, n)), canonical_stream(StreamValue(k2, n)))]
            pairs += [(random_stream(k1, n, rng), random_stream(k2, n, rng)) for _ in range(orderings)]
            for s1, s2 in pairs:
                err = abs(value(unit(s1, s2)).fraction - exact)
                worst = max(worst, err)
                if err > bound:
                    bad.append(f"k1={k1} k2={k2} err={err}")
                elif unit.kind is UnitKind.SCSA and (k1 - k2) % 2 == 0 and err != 0:
                    bad.append(f"k1={k1} k2={k2} equal parity but err={err}")
    status = "violation" if bad else "ok"
    return CheckRow(unit.kind.value, n, status, float(worst), float(bound), (n + 1) ** 2,
                    orderings, "; ".join(bad[:5]))


def oracle_check(
    units: Sequence[str] | None, n_list: Iterable[int], orderings: int = 0, seed: int = 0,
    workers: int = 1,
) -> list[CheckRow]:
    if units is not None and len(units) == 0:
        raise ValueError("unit list is empty")
    kinds = BSC_KINDS if units is None else [get_unit(u).kind for u in units]
    jobs = [(k, n) for k in kinds for n in n_list]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as ex:
            futs = [ex.submit(check_unit, k, n, orderings, seed) for k, n in jobs]
            return [f.result() for f in futs]
    return [check_unit(k, n, orderings, seed) for k, n in jobs]
