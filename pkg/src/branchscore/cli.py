"""Command-line front end: validate and run scores, reproduce the
scaling benchmark.

Exit codes: 0 success, 1 domain error (validation, flags, tick fault),
2 I/O error.
"""

from __future__ import annotations

import argparse
import gc
import json
import os
import re
import statistics
import sys
import time

from .engine import SEEDED_RANDOM
from .runner import ScoreRunner
from .score import compile_score, errors as diag_errors, validate_score
from .scorefile import (
    ScoreFormatError,
    benchmark_point_count,
    generate_benchmark,
    parse_score,
)
from .store import Atom, InconsistencyError

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2

_SET_SPEC = re.compile(
    r"^(?P<var>[A-Za-z_][A-Za-z0-9_]*)=(?P<value>-?\d+)@(?P<lo>\d+)(\.\.(?P<hi>\d+))?$"
)


class CliError(Exception):
    def __init__(self, message, code=EXIT_DOMAIN):
        super().__init__(message)
        self.code = code


def _read_score(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_IO) from None
    try:
        return parse_score(text)
    except ScoreFormatError as exc:
        raise CliError(f"{path}: {exc}") from None


def parse_set_flags(flags):
    """--set var=value@unit or var=value@lo..hi -> {unit: {var: value}}."""
    schedule: dict[int, dict] = {}
    for flag in flags:
        m = _SET_SPEC.match(flag)
        if not m:
            raise CliError(
                f"bad --set {flag!r}; expected var=value@unit or var=value@lo..hi"
            )
        lo = int(m.group("lo"))
        hi = int(m.group("hi")) if m.group("hi") else lo
        if hi < lo:
            raise CliError(f"bad --set {flag!r}: empty unit range")
        for unit in range(lo, hi + 1):
            schedule.setdefault(unit, {})[m.group("var")] = int(m.group("value"))
    return schedule


def default_seed():
    raw = os.environ.get("BRANCHSCORE_SEED")
    return int(raw) if raw else 0


# --- commands ----------------------------------------------------------


def cmd_validate(args):
    score = _read_score(args.score)
    diags = validate_score(score)
    for d in diags:
        print(str(d), file=sys.stderr)
    return EXIT_DOMAIN if diag_errors(diags) else EXIT_OK


def cmd_run(args):
    if args.max_units < 1:
        raise CliError("max-units must be >= 1")
    if args.tick_ms < 0:
        raise CliError("tick-ms must be >= 0")
    score = _read_score(args.score)
    diags = validate_score(score)
    if diag_errors(diags):
        for d in diags:
            print(str(d), file=sys.stderr)
        return EXIT_DOMAIN

    schedule = parse_set_flags(args.set or [])
    runner = ScoreRunner(score, seed=args.seed, policy=SEEDED_RANDOM)
    out = sys.stdout if args.trace is None else open(args.trace, "w", encoding="utf-8")
    include_timing = args.tick_ms > 0 or args.timing
    try:
        next_deadline = time.monotonic()
        for unit in range(args.max_units):
            env = [Atom(var, "=", v) for var, v in schedule.get(unit, {}).items()]
            try:
                record = runner.tick(env)
            except InconsistencyError as exc:
                print(f"tick error at unit {exc.unit}: {exc}", file=sys.stderr)
                return EXIT_DOMAIN
            print(record.to_json(include_timing), file=out, flush=args.tick_ms > 0)
            if runner.ended:
                break
            if args.tick_ms > 0:
                next_deadline += args.tick_ms / 1000.0
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                else:
                    print(f"tick overrun at unit {unit}", file=sys.stderr)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_bench(args):
    if not 1 <= args.n_low <= args.n_high <= 16:
        raise CliError("bench range must satisfy 1 <= n-low <= n-high <= 16")
    if args.runs < 1:
        raise CliError("runs must be >= 1")
    rows = []
    print(f"{'n':>3} {'points':>7} {'relations':>9} {'runs':>5} "
          f"{'units':>6} {'mean_ms':>8} {'p95_ms':>8} {'max_ms':>8}")
    for n in range(args.n_low, args.n_high + 1):
        score = generate_benchmark(n)
        compiled = compile_score(score)
        times_us = []
        total_units = 0
        gc_was_enabled = gc.isenabled()
        gc.disable()  # keep collector pauses out of the tick timings
        try:
            for _ in range(args.runs):
                runner = ScoreRunner(score, seed=args.seed, compiled=compiled)
                for _unit in range(2 * n + 1):
                    record = runner.tick([])
                    times_us.append(record.time_us)
                    total_units += 1
                    if runner.ended:
                        break
        finally:
            if gc_was_enabled:
                gc.enable()
            gc.collect()
        times_us.sort()
        row = {
            "n": n,
            "points": len(score.points),
            "relations": len(score.intervals),
            "runs": args.runs,
            "total_units": total_units,
            "mean_us": statistics.mean(times_us),
            "p95_us": times_us[min(len(times_us) - 1, int(0.95 * len(times_us)))],
            "max_us": times_us[-1],
        }
        assert row["points"] == benchmark_point_count(n)
        rows.append(row)
        print(
            f"{n:>3} {row['points']:>7} {row['relations']:>9} {args.runs:>5} "
            f"{total_units:>6} {row['mean_us'] / 1000:>8.3f} "
            f"{row['p95_us'] / 1000:>8.3f} {row['max_us'] / 1000:>8.3f}"
        )
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                json.dump({"runs": args.runs, "rows": rows}, fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc.strerror}", EXIT_IO) from None
    return EXIT_OK


def cmd_serve(args):
    if args.tick_ms < 1:
        raise CliError("tick-ms must be >= 1")
    score = _read_score(args.score)
    diags = validate_score(score)
    if diag_errors(diags):
        for d in diags:
            print(str(d), file=sys.stderr)
        return EXIT_DOMAIN
    from .service import serve

    serve(score, tick_ms=args.tick_ms, port=args.port, seed=args.seed)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="branchscore",
        description="Run conditional-branching timed interactive scores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a score file")
    p.add_argument("score")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="execute a score and stream its trace")
    p.add_argument("score")
    p.add_argument("--tick-ms", type=int, default=0, help="wall-clock pacing; 0 = logical ticks")
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument(
        "--set",
        action="append",
        metavar="VAR=VALUE@UNITS",
        help="scripted environment tell, e.g. finish=1@20 or finish=0@0..19",
    )
    p.add_argument("--max-units", type=int, default=1000)
    p.add_argument("--trace", help="trace output file (default stdout)")
    p.add_argument("--timing", action="store_true", help="include per-tick time in the trace")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="scaling benchmark over generated scores")
    p.add_argument("--n-low", type=int, default=2)
    p.add_argument("--n-high", type=int, default=10)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--out", help="write a machine-readable report")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="host a score over the live protocol")
    p.add_argument("score")
    p.add_argument("--tick-ms", type=int, default=100)
    p.add_argument("--port", type=int, default=int(os.environ.get("BRANCHSCORE_PORT", "8737")))
    p.add_argument("--seed", type=int, default=default_seed())
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
