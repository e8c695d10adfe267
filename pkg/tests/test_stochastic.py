import math

import numpy as np
import pytest

from bsa.stochastic import (
    MAXIMAL_TAPS,
    SWEEP_COLUMNS,
    Lfsr,
    and_multiply,
    bernoulli_stream_values,
    binomial_errors,
    error_sweep,
    lfsr_cycle,
    lfsr_stream,
    mux_add,
    sng,
    sweep_to_csv,
)
from bsa.stream import BitStream, StreamError, StreamValue, canonical_stream, value


@pytest.mark.parametrize("width", sorted(MAXIMAL_TAPS))
def test_lfsr_is_maximal(width):
    cyc = lfsr_cycle(width)
    assert len(cyc) == 2**width - 1
    assert sorted(cyc) == list(range(1, 2**width))


def test_lfsr_examples():
    assert lfsr_cycle(3, 1).tolist() == [4, 2, 5, 6, 7, 3, 1]
    lf = Lfsr(4, 9)
    first = lfsr_stream(lf, 1)
    assert first == [Lfsr(4, 9).step()]
    with pytest.raises(ValueError):
        Lfsr(4, 0)
    with pytest.raises(ValueError):
        lfsr_stream(Lfsr(4, 1), 0)


def test_lfsr_seeds_give_rotations():
    a, b = lfsr_cycle(5, 1).tolist(), lfsr_cycle(5, 17).tolist()
    i = a.index(b[0])
    assert a[i:] + a[:i] == b


def test_lfsr_for_length_width():
    assert Lfsr.for_length(8).width == 3
    assert Lfsr.for_length(256).width == 8
    assert Lfsr.for_length(2).width == 3


# 8 states of the 3-bit register cover the cycle once plus one repeat; with
# the <= comparator 4/8 maps to states {1, 2, 3}
SNG_COUNTS = {1: 3, 2: 3, 3: 4, 4: 4, 5: 3, 6: 3, 7: 4}


@pytest.mark.parametrize("seed, ones", sorted(SNG_COUNTS.items()))
def test_sng_enumerated_counts(seed, ones):
    r = lfsr_stream(Lfsr(3, seed), 8)
    assert sng(StreamValue(4, 8), r, 7).ones == ones


def test_sng_extremes_and_errors():
    r = lfsr_stream(Lfsr(4, 3), 16)
    assert sng(StreamValue(0, 16), r, 15).ones == 0
    assert sng(StreamValue(16, 16), r, 15).ones == 16
    with pytest.raises(StreamError):
        sng(StreamValue(1, 16), r[:10], 15)


def test_sng_full_cycle_density():
    # one full 8-bit cycle visits 1..255 once, so k/255 yields exactly k ones
    cyc = lfsr_cycle(8)
    for k in range(0, 256, 17):
        assert sng(StreamValue(k, 255), cyc, 255).ones == k


def test_and_multiply_examples():
    assert and_multiply(BitStream("1010"), BitStream("1100")) == BitStream("1000")
    assert value(and_multiply(BitStream("1010"), BitStream("0101"))).k == 0
    s = BitStream("0110101")
    assert and_multiply(BitStream("1111111"), s) == s
    with pytest.raises(StreamError):
        and_multiply(BitStream("10"), BitStream("101"))


def test_mux_add_examples():
    s = BitStream("10110")
    sel = BitStream("01011")
    assert mux_add(s, s, sel) == s
    z = BitStream("0000")
    assert mux_add(z, z, BitStream("1010")) == z
    with pytest.raises(StreamError):
        mux_add(s, s, BitStream("01"))


def test_mux_add_monte_carlo_mean():
    rng = np.random.default_rng(5)
    n, trials = 32, 100_000
    a = rng.random((trials, n)) < 0.5
    b = rng.random((trials, n)) < 0.5
    sel = rng.random((trials, n)) < 0.5
    vals = np.where(sel, b, a).mean(axis=1)
    sigma = vals.std() / math.sqrt(trials)
    assert abs(vals.mean() - 0.5) <= 3 * sigma


def test_mux_add_bounded_deviation():
    rng = np.random.default_rng(1)
    half = canonical_stream(StreamValue(8, 16))
    for _ in range(200):
        s1 = BitStream(rng.integers(0, 2, 16))
        s2 = BitStream(rng.integers(0, 2, 16))
        out = float(value(mux_add(s1, s2, half)))
        assert abs(out - (float(value(s1)) + float(value(s2))) / 2) <= 0.5


def test_binomial_errors_closed_form():
    assert binomial_errors(0.0, 10) == (0.0, None)
    assert binomial_errors(1.0, 10)[0] == 0.0
    assert binomial_errors(0.5, 100)[0] == pytest.approx(0.05)
    assert binomial_errors(0.25, 12)[1] == pytest.approx(math.sqrt(0.75 / 3))
    with pytest.raises(ValueError):
        binomial_errors(0.5, 0)


def test_binomial_std_monte_carlo():
    vals = bernoulli_stream_values(0.25, 1000, 100_000, np.random.default_rng(3))
    assert vals.std() == pytest.approx(binomial_errors(0.25, 1000)[0], rel=0.05)


def test_and_product_mean_converges():
    stats = error_sweep(0.5, 0.5, [64], 100_000, seed=2)
    # mean abs error of a Binomial(64, 1/4)/64 is tiny but strictly positive
    assert 0 < stats[0].mean_abs_error < 0.06


def test_error_sweep_reproducible_and_validated():
    a = error_sweep(StreamValue(1, 2), StreamValue(1, 2), [16, 64], 1, seed=4)
    b = error_sweep(0.5, 0.5, [16, 64], 1, seed=4)
    assert a == b
    with pytest.raises(ValueError):
        error_sweep(0.5, 0.5, [16], 0)
    with pytest.raises(ValueError):
        error_sweep(0.5, 0.5, [16], 10, op="OR")


def test_error_sweep_parallel_matches_serial():
    serial = error_sweep(0.5, 0.5, [16, 64, 256], 2000, seed=1)
    parallel = error_sweep(0.5, 0.5, [16, 64, 256], 2000, seed=1, workers=2)
    assert serial == parallel


def test_error_sweep_statistics_non_negative_and_decreasing():
    stats = error_sweep(0.5, 0.5, [16, 64, 256, 1024], 20_000, seed=0)
    for s in stats:
        assert min(s.mean_abs_error, s.std_error, s.relative_error) >= 0
    errs = [s.mean_abs_error for s in stats]
    assert errs == sorted(errs, reverse=True)


def test_sweep_csv_columns():
    text = sweep_to_csv(error_sweep(0.5, 0.5, [16], 10, seed=0))
    assert text.splitlines()[0] == ",".join(SWEEP_COLUMNS)
    assert text.splitlines()[1].startswith("16,")
