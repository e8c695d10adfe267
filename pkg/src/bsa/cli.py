"""Command-line driver: ``bsa <command> [flags]``.

Every command writes a report that carries its configuration, seed and the
package version. Output goes to ``--out``, else to ``$BSA_OUTPUT_DIR/<command>.<format>``
when that variable is set, else to stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .stream import BitStream, StreamError, StreamValue

log = logging.getLogger("bsa")

OUTPUT_DIR_ENV = "BSA_OUTPUT_DIR"


class CliError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _value(text: str) -> StreamValue | float:
    if "/" in text:
        return StreamValue.parse(text)
    return float(text)


# ---------------------------------------------------------------------------
# report rendering


def render(rows: list[dict], config: dict, fmt: str, extra: dict | None = None) -> str:
    meta = {"version": __version__, "seed": config.get("seed"), "config": config}
    if fmt == "json":
        doc = dict(meta, rows=rows)
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=2, sort_keys=False, default=str) + "\n"
    buf = io.StringIO()
    buf.write(f"# version: {__version__}\n")
    buf.write(f"# seed: {config.get('seed')}\n")
    buf.write(f"# config: {json.dumps(config, sort_keys=True, default=str)}\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def emit(text: str, args: argparse.Namespace) -> None:
    out = args.out
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        out = Path(os.environ[OUTPUT_DIR_ENV]) / f"{args.command}.{args.format}"
    if out is None or str(out) == "-":
        sys.stdout.write(text)
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    log.info("wrote %s", out)


def _config(args: argparse.Namespace, *skip: str) -> dict:
    drop = {"func", "out", "format", "verbose", *skip}
    return {k: v for k, v in sorted(vars(args).items()) if k not in drop}


# ---------------------------------------------------------------------------
# commands


def cmd_oracle_check(args) -> int:
    from .verify import oracle_check

    units = None if args.units == ["all"] else args.units
    rows = oracle_check(units, args.n, orderings=args.trials, seed=args.seed, workers=args.workers)
    emit(render([r.as_dict() for r in rows], _config(args), args.format), args)
    bad = [r for r in rows if r.status == "violation"]
    for r in bad:
        log.error("%s n=%d violates its bound: %s", r.unit, r.n, r.reason)
    return 1 if bad else 0


def cmd_error_sweep(args) -> int:
    from .stochastic import SWEEP_COLUMNS, error_sweep

    if args.trials < 1:
        raise CliError("--trials must be >= 1")
    stats = error_sweep(args.p1, args.p2, args.n, args.trials, seed=args.seed, workers=args.workers)
    rows = [{c: getattr(s, c) for c in SWEEP_COLUMNS} for s in stats]
    emit(render(rows, _config(args), args.format), args)
    return 0


def cmd_timing_demo(args) -> int:
    from .timing import (FaultModel, Glitch, correctness, integrity, perturb, pulses_trace,
                         skew_sweep, to_trace)

    s = BitStream(args.stream)
    expected = to_trace(s, args.bit_duration)
    ev = StreamValue(s.ones, len(s))
    if args.sweep_skew is not None:
        rows = skew_sweep(s, args.bit_duration, args.sweep_skew, stretch=args.stretch)
        emit(render(rows, _config(args), args.format), args)
        return 0
    if args.measured is not None:
        measured = pulses_trace(args.measured, expected)
    else:
        if args.glitches:
            fm = FaultModel.random_glitches(args.glitches, expected.total * args.stretch,
                                            args.bit_duration, args.seed, stretch=args.stretch,
                                            rise_delay=args.rise_delay, fall_delay=args.fall_delay)
        else:
            fm = FaultModel(args.stretch, (), args.rise_delay, args.fall_delay)
        measured = perturb(expected, fm, seed=args.seed)
    obtained, cor = correctness(measured, ev, args.bit_duration)
    row = {
        "expected_value": str(ev),
        "obtained_value": str(obtained),
        "integrity": round(integrity(measured, expected), 6),
        "correctness": round(cor, 6),
        "expected_trace": " ".join(f"{l}:{d:.6g}" for l, d in expected.segments),
        "measured_trace": " ".join(f"{l}:{d:.6g}" for l, d in measured.segments),
    }
    emit(render([row], _config(args), args.format), args)
    return 0


def cmd_nn_eval(args) -> int:
    from . import nn

    for p in (args.weights, args.test):
        if not Path(p).is_file():
            raise CliError(f"file not found: {p}")
    backends = [nn.make_backend(b, seed=args.seed) for b in args.backends]
    net = nn.NetworkModel.load(args.weights)
    ds = nn.load_pendigits(args.test)
    if args.samples:
        ds = ds.head(args.samples)
    rows = []
    for b in backends:
        for n in args.n:
            mr = nn.misclassification_rate(net, ds, b, n)
            rows.append({"backend": b.name, "n": n, "mr": round(mr, 6), "samples": len(ds),
                         "seed": args.seed})
    cfg = _config(args)
    cfg["weights"], cfg["test"] = str(args.weights), str(args.test)
    emit(render(rows, cfg, args.format), args)
    return 0


def cmd_train(args) -> int:
    from . import nn

    if not Path(args.train).is_file():
        raise CliError(f"file not found: {args.train}")
    net = nn.train(nn.load_pendigits(args.train), hidden=args.hidden, epochs=args.epochs,
                   lr=args.lr, seed=args.seed)
    text = net.to_json()
    if args.out is None:
        raise CliError("--out is required for train")
    Path(args.out).write_text(text, encoding="utf-8")
    return 0


def cmd_schedule(args) -> int:
    from .async_units import aism_schedule

    if len(args.n) != 1:
        raise CliError("schedule takes a single --n")
    text = aism_schedule(args.n[0]).to_json() + "\n"
    emit(text, args)
    return 0


def cmd_trace(args) -> int:
    from .sync_units import scsa_trace, scsm_trace, write_jsonl

    s1, s2 = BitStream(args.in1), BitStream(args.in2)
    rows = scsa_trace(s1, s2) if args.unit == "SCSA" else scsm_trace(s1, s2)
    buf = io.StringIO()
    write_jsonl(rows, buf)
    emit(buf.getvalue(), args)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser, n_default: str, trials_default: int) -> None:
    p.add_argument("--n", type=_int_list, default=_int_list(n_default),
                   help="stream length(s), comma separated")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=trials_default)
    p.add_argument("--out", default=None, help="output file ('-' for stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1, help="process pool size")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bsa", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"bsa {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle-check", help="exhaustive error check of the stream units")
    _common(p, "8", 0)
    p.add_argument("--units", type=_str_list, default=["all"],
                   help="comma separated unit names or 'all'; --trials sets random orderings per pair")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("error-sweep", help="stochastic AND-multiplier error versus stream length")
    _common(p, "16,64,256,1024", 10000)
    p.add_argument("--p1", type=_value, default=0.5)
    p.add_argument("--p2", type=_value, default=0.5)
    p.set_defaults(func=cmd_error_sweep)

    p = sub.add_parser("timing-demo", help="integrity and correctness under timing faults")
    _common(p, "8", 0)
    p.add_argument("--stream", default="10110001", help="expected stream literal")
    p.add_argument("--bit-duration", type=float, default=1.0, help="ns per bit")
    p.add_argument("--measured", type=_float_list, default=None,
                   help="measured 1-pulse durations in ns (overrides the fault model)")
    p.add_argument("--stretch", type=float, default=1.0)
    p.add_argument("--rise-delay", type=float, default=0.0)
    p.add_argument("--fall-delay", type=float, default=0.0)
    p.add_argument("--glitches", type=int, default=0, help="number of random glitches")
    p.add_argument("--sweep-skew", type=_float_list, default=None,
                   help="falling-minus-rising edge delays to sweep, in ns")
    p.set_defaults(func=cmd_timing_demo)

    from .nn import DEFAULT_TEST, DEFAULT_TRAIN, DEFAULT_WEIGHTS, N_LEVELS

    p = sub.add_parser("nn-eval", help="misclassification rate per backend and stream length")
    _common(p, ",".join(map(str, N_LEVELS)), 0)
    p.add_argument("--backends", type=_str_list, default=["float-ref", "aisa-aism", "sisa-sism"])
    p.add_argument("--weights", default=str(DEFAULT_WEIGHTS))
    p.add_argument("--test", default=str(DEFAULT_TEST))
    p.add_argument("--samples", type=int, default=0, help="evaluate only the first N samples")
    p.set_defaults(func=cmd_nn_eval)

    p = sub.add_parser("train", help="train the 16-H-10 network in floating point")
    _common(p, "0", 0)
    p.add_argument("--train", default=str(DEFAULT_TRAIN))
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--epochs", type=int, default=400)
    p.add_argument("--lr", type=float, default=0.1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("schedule", help="multiplier delay schedule as JSON")
    _common(p, "8", 0)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("trace", help="per-step JSON lines trace of a constant-length unit")
    _common(p, "8", 0)
    p.add_argument("--unit", type=str.upper, choices=("SCSA", "SCSM"), default="SCSM")
    p.add_argument("--in1", required=True, help="first input stream literal")
    p.add_argument("--in2", required=True, help="second input stream literal")
    p.set_defaults(func=cmd_trace)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        ap.error("--workers must be >= 1")
    try:
        return args.func(args)
    except (CliError, StreamError, ValueError, OSError) as exc:
        print(f"bsa {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
