import pytest
from hypothesis import given, settings, strategies as st

from bsa.stream import BitStream, StreamValue, value
from bsa.timing import (
    FaultModel,
    Glitch,
    PerturbationLog,
    PulseTrace,
    correctness,
    integrity,
    perturb,
    pulses_trace,
    skew_sweep,
    to_trace,
)

EXPECTED = BitStream("10110001")


def test_to_trace_examples():
    assert to_trace(EXPECTED, 1.0).segments == ((1, 1.0), (0, 1.0), (1, 2.0), (0, 3.0), (1, 1.0))
    assert to_trace(BitStream("1111"), 2.0).segments == ((1, 8.0),)
    assert to_trace(BitStream("0"), 1.0).segments == ((0, 1.0),)
    with pytest.raises(ValueError):
        to_trace(EXPECTED, 0.0)


@pytest.mark.parametrize("segs", [((1, 1.0), (1, 1.0)), ((2, 1.0),), ((1, 0.0),)])
def test_trace_validation(segs):
    with pytest.raises(ValueError):
        PulseTrace(segs, 1.0)


def test_trace_csv():
    lines = to_trace(BitStream("1100"), 1.5).to_csv().splitlines()
    assert lines == ["level,duration_ns", "1,3", "0,3"]


def test_worked_example():
    exp = to_trace(EXPECTED, 1.0)
    meas = pulses_trace([1.1, 2.1, 0.4], exp)
    assert meas.one_durations() == pytest.approx([1.1, 2.1, 0.4])
    assert integrity(meas, exp) == pytest.approx(75.0)
    obtained, pct = correctness(meas, StreamValue(4, 8), 1.0)
    assert str(obtained) == "3/8"
    assert pct == pytest.approx(75.0)


def test_integrity_examples():
    exp = to_trace(EXPECTED, 1.0)
    assert integrity(exp, exp) == 100.0
    doubled = pulses_trace([2.0, 4.0, 2.0], exp)
    assert integrity(doubled, exp) == 0.0
    fewer = to_trace(BitStream("10110000"), 1.0)
    assert integrity(fewer, exp) == 0.0


def test_correctness_examples():
    exp = to_trace(EXPECTED, 1.0)
    assert correctness(exp, StreamValue(4, 8), 1.0) == (StreamValue(4, 8), 100.0)
    silent = to_trace(BitStream("00000000"), 1.0)
    assert correctness(silent, StreamValue(4, 8), 1.0) == (StreamValue(0, 8), 0.0)
    assert correctness(silent, StreamValue(0, 8), 1.0)[1] == 100.0
    assert correctness(exp, StreamValue(0, 8), 1.0)[1] == 0.0
    with pytest.raises(ValueError):
        correctness(exp, StreamValue(4, 8), 0)


def test_correctness_rounds_half_away_from_zero():
    exp = to_trace(BitStream("1000"), 1.0)
    obtained, _ = correctness(pulses_trace([1.5], exp), StreamValue(1, 4), 1.0)
    assert obtained.k == 2
    obtained, _ = correctness(pulses_trace([2.5], exp), StreamValue(1, 4), 1.0)
    assert obtained.k == 3


def test_perturb_examples():
    t = to_trace(BitStream("010"), 1.0)
    assert perturb(t, FaultModel()) == t
    shifted = perturb(t, FaultModel(rise_delay=0.3))
    assert shifted.one_durations() == pytest.approx([0.7])
    slow = perturb(PulseTrace(((1, 2.0),), 1.0), FaultModel(stretch=1.5))
    assert slow.segments == ((1, 3.0),)


def test_perturb_collapsed_pulse_logged():
    t = to_trace(BitStream("0100"), 1.0)
    log = PerturbationLog()
    out = perturb(t, FaultModel(rise_delay=0.6, fall_delay=-0.5), plog=log)
    assert out.one_durations() == []
    assert log.deleted


def test_perturb_glitches():
    t = to_trace(BitStream("1001"), 1.0)
    up = perturb(t, FaultModel(glitches=(Glitch(1.5, 0.2, 1),)))
    assert len(up.one_durations()) == 3
    down = perturb(t, FaultModel(glitches=(Glitch(0.4, 0.2, 0),)))
    assert len(down.one_durations()) == 3
    assert integrity(down, t) == 0.0
    with pytest.raises(ValueError):
        perturb(t, FaultModel(glitches=(Glitch(0.0, 1.0, 1),)))
    with pytest.raises(ValueError):
        perturb(t, FaultModel(stretch=0.5))


def test_random_glitches_seeded():
    a = FaultModel.random_glitches(3, 8.0, 1.0, seed=4)
    assert a == FaultModel.random_glitches(3, 8.0, 1.0, seed=4)
    assert a != FaultModel.random_glitches(3, 8.0, 1.0, seed=5)


def test_severe_stretch_keeps_correctness_reported():
    exp = to_trace(EXPECTED, 1.0)
    meas = perturb(exp, FaultModel(stretch=2.0))
    assert integrity(meas, exp) == 0.0
    obtained, pct = correctness(meas, StreamValue(4, 8), 1.0)
    assert obtained.k == 8 and pct == 0.0


streams = st.lists(st.integers(0, 1), min_size=1, max_size=64).map(BitStream)


@given(streams, st.floats(0.01, 100.0))
def test_trace_round_trip(s, d):
    assert correctness(to_trace(s, d), value(s), d) == (value(s), 100.0)
    assert perturb(to_trace(s, d), FaultModel()) == to_trace(s, d)


@given(streams, st.lists(st.floats(0.05, 3.0), min_size=1, max_size=8), st.floats(0.1, 10.0))
@settings(max_examples=100)
def test_integrity_scale_invariant(s, durs, scale):
    if s.ones == 0:
        return
    exp = to_trace(s, 1.0)
    pulses = exp.pulses()
    durs = (durs * len(pulses))[: len(pulses)]
    meas = pulses_trace(durs, exp)
    exp2 = to_trace(s, scale)
    meas2 = pulses_trace([d * scale for d in durs], exp2)
    assert integrity(meas, exp) == pytest.approx(integrity(meas2, exp2), abs=1e-9)


def test_skew_monotone():
    rows = skew_sweep(BitStream("10101010"), 1.0, [0.0, 0.1, 0.2, 0.3, 0.4, 0.45])
    vals = [r["integrity"] for r in rows]
    assert vals == sorted(vals, reverse=True)
    assert rows[0]["correctness"] == 100.0
