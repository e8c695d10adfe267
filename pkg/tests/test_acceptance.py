"""Acceptance gate: each test checks one criterion at its stated tolerance and
records a PASS/FAIL line that is printed at the end of the run."""

import time
from fractions import Fraction

import numpy as np
import pytest

from bsa import nn
from bsa.stochastic import bernoulli_stream_values, binomial_errors, error_sweep
from bsa.stream import StreamValue, UnitKind, canonical_stream, permute, value
from bsa.sync_units import scsm_regenerate, successive_run
from bsa.timing import correctness, integrity, pulses_trace, to_trace
from bsa.stream import BitStream
from bsa.units import BSC_KINDS, get_unit
from bsa.verify import check_unit

from oracles import regen_interpreter


def test_ac1_fully_accurate_exactness(criterion):
    t0 = time.perf_counter()
    rows = [check_unit(u, n, orderings=50, seed=1)
            for u in ("AISA", "AISM", "SISA", "SISM") for n in (2, 4, 8, 16)]
    dt = time.perf_counter() - t0
    ok = all(r.status == "ok" and r.max_error == 0 for r in rows) and dt < 60
    criterion("AC1 fully-accurate exactness", ok,
              f"{len(rows)} unit/n sweeps, max error {max(r.max_error for r in rows)}, {dt:.1f}s")


def test_ac2_semi_accurate_bound(criterion):
    rows = [check_unit(u, n, orderings=50, seed=2) for u in ("SCSA", "SCSM") for n in (2, 4, 8, 16)]
    ok = all(r.status == "ok" and Fraction(r.max_error).limit_denominator(1 << 20) <= Fraction(1, 2 * r.n)
             for r in rows)
    worst = max(r.max_error * r.n for r in rows)
    criterion("AC2 semi-accurate bound", ok, f"max error x n = {worst} (bound 0.5), parity exactness checked")


def test_ac3_regeneration_fidelity(criterion):
    mismatches = 0
    pairs = 0
    for n in (4, 8, 16, 32):
        for k1 in range(n + 1):
            for k2 in range(n + 1):
                in1 = canonical_stream(StreamValue(k1, n)).bits.tolist()
                in2 = canonical_stream(StreamValue(k2, n)).bits.tolist()
                want = regen_interpreter(in1, in2)
                r1, r2 = scsm_regenerate(StreamValue(k1, n), StreamValue(k2, n))
                mismatches += (r1.bits.tolist(), r2.bits.tolist()) != want
                pairs += 1
    criterion("AC3 regeneration fidelity", mismatches == 0, f"{pairs} pairs, {mismatches} mismatches")


def test_ac4_binomial_std(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for i, p in enumerate((0.1, 0.25, 0.5)):
        for n in (16, 64, 256):
            vals = bernoulli_stream_values(p, n, 100_000, np.random.default_rng([4, i, n]))
            worst = max(worst, abs(vals.std() / binomial_errors(p, n)[0] - 1))
    dt = time.perf_counter() - t0
    criterion("AC4 binomial std", worst <= 0.05 and dt < 60,
              f"max relative deviation {worst:.4f} (tol 0.05), {dt:.1f}s")


def test_ac5_and_error_trend(criterion):
    stats = error_sweep(0.5, 0.5, [16, 64, 256, 1024], 100_000, seed=5)
    ratios = [a.mean_abs_error / b.mean_abs_error for a, b in zip(stats, stats[1:])]
    ok = all(abs(r / 2 - 1) <= 0.15 for r in ratios)
    criterion("AC5 AND error halves per 4x length", ok, "ratios " + ", ".join(f"{r:.3f}" for r in ratios))


def test_ac6_worked_timing_example(criterion):
    expected = to_trace(BitStream("10110001"), 1.0)
    measured = pulses_trace([1.1, 2.1, 0.4], expected)
    integ = integrity(measured, expected)
    obtained, corr = correctness(measured, StreamValue(4, 8), 1.0)
    ok = round(integ, 1) == 75.0 and str(obtained) == "3/8" and round(corr, 1) == 75.0
    criterion("AC6 timing worked example", ok, f"integrity {integ:.1f}%, correctness ({obtained}, {corr:.1f}%)")


def test_ac7_successive_processing(criterion):
    rng = np.random.default_rng(7)
    worst_batch = worst_cum = Fraction(0)
    ok = True
    for kind in ("SCSA", "SCSM"):
        unit = get_unit(kind)
        for n in (4, 8, 16, 32):
            for _ in range(200):
                batches = []
                for _ in range(8):
                    k1, k2 = rng.integers(0, n + 1, 2)
                    batches.append((permute(canonical_stream(StreamValue(int(k1), n)), rng.permutation(n)),
                                    permute(canonical_stream(StreamValue(int(k2), n)), rng.permutation(n))))
                res = successive_run(unit.descriptor(n), batches)
                cum = Fraction(0)
                for v, (a, b) in zip(res.values, batches):
                    err = v.fraction - unit.exact(a.ones, b.ones, n)
                    cum += err
                    worst_batch = max(worst_batch, abs(err) * n)
                    worst_cum = max(worst_cum, abs(cum) * n)
                ok &= res.supported and len(res.values) == 8
    ok &= worst_batch <= 1 and worst_cum <= Fraction(1, 2)
    b = [(canonical_stream(StreamValue(1, 4)),) * 2] * 8
    refused = [k for k in ("AISA", "AISM", "SISA", "SISM") if not successive_run(k, b).supported]
    ok &= len(refused) == 4
    criterion("AC7 successive processing", ok,
              f"max per-batch error x n = {float(worst_batch)}, max cumulative x n = {float(worst_cum)}, "
              f"unsupported: {','.join(refused)}")


def test_ac8_order_invariance(criterion):
    rng = np.random.default_rng(8)
    report = []
    ok = True
    for kind in BSC_KINDS:
        unit = get_unit(kind)
        changes = violations = 0
        for _ in range(10_000):
            n = int(rng.choice([4, 8, 16]))
            k1, k2 = (int(x) for x in rng.integers(0, n + 1, 2))
            base = value(unit(canonical_stream(StreamValue(k1, n)), canonical_stream(StreamValue(k2, n))))
            s1 = permute(canonical_stream(StreamValue(k1, n)), rng.permutation(n))
            s2 = permute(canonical_stream(StreamValue(k2, n)), rng.permutation(n))
            out = value(unit(s1, s2))
            if out != base:
                changes += 1
            exact = unit.exact(k1, k2, n)
            if abs(out.fraction - exact) > unit.bound(n):
                violations += 1
            if unit.bound(n) and out != base and abs(out.fraction - base.fraction) > 2 * unit.bound(n):
                violations += 1
        if unit.bound(4) == 0:
            ok &= changes == 0
        ok &= violations == 0
        report.append(f"{kind.value}:{changes}/{violations}")
    criterion("AC8 order invariance", ok, "changes/violations " + " ".join(report))


@pytest.fixture(scope="module")
def nn_grid():
    t0 = time.perf_counter()
    net = nn.NetworkModel.load(nn.DEFAULT_WEIGHTS)
    ds = nn.load_pendigits(nn.DEFAULT_TEST).head(500)
    grid = {}
    preds = {}
    for name in nn.FULLY_ACCURATE_BACKENDS:
        b = nn.make_backend(name)
        for n in nn.N_LEVELS:
            preds[name, n] = nn.predict(net, ds, b, n)
            grid[name, n] = 100.0 * float(np.mean(preds[name, n] != ds.labels))
    for seed in (0, 1, 2):
        b = nn.make_backend("stochastic", seed=seed)
        for n in (8, 16, 32, 64):
            grid[f"stochastic:{seed}", n] = nn.misclassification_rate(net, ds, b, n)
    return grid, preds, len(ds), time.perf_counter() - t0


def test_ac9a_fully_accurate_identical(criterion, nn_grid):
    grid, _, _, _ = nn_grid
    ok = all(len({grid[b, n] for b in nn.FULLY_ACCURATE_BACKENDS}) == 1 for n in nn.N_LEVELS)
    criterion("AC9a fully-accurate backends identical MR", ok,
              " ".join(f"n={n}:{grid['aisa-aism', n]:.1f}%" for n in nn.N_LEVELS))


def test_ac9b_fully_accurate_non_increasing(criterion, nn_grid):
    grid, _, _, _ = nn_grid
    mr = [grid["aisa-aism", n] for n in nn.N_LEVELS]
    ok = all(b <= a for a, b in zip(mr, mr[1:]))
    criterion("AC9b fully-accurate MR non-increasing in n", ok, " -> ".join(f"{m:.1f}" for m in mr))


def test_ac9c_stochastic_worse(criterion, nn_grid):
    grid, _, _, _ = nn_grid
    ok = all(grid[f"stochastic:{s}", n] > grid["aisa-aism", n] for s in (0, 1, 2) for n in (8, 16, 32, 64))
    detail = " ".join(
        f"n={n}:{min(grid[f'stochastic:{s}', n] for s in (0, 1, 2)):.1f}>{grid['aisa-aism', n]:.1f}"
        for n in (8, 16, 32, 64)
    )
    criterion("AC9c stochastic MR above fully-accurate (3 seeds)", ok, detail)


def test_ac9d_prediction_agreement(criterion, nn_grid):
    _, preds, count, elapsed = nn_grid
    agree = min(float(np.mean(preds["float-ref", 256] == preds[b, 256])) for b in ("aisa-aism", "sisa-sism"))
    ok = agree >= 0.99 and count == 500 and elapsed < 600
    criterion("AC9d float-ref agreement at n=256", ok, f"{100 * agree:.1f}% on {count} samples, grid {elapsed:.1f}s")
