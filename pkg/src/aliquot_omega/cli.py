"""Command-line entry point: ``survey`` plus the analytic subcommands
``psi``, ``ap``, ``mertens`` and ``qdiv``.

Exit codes: 0 success, 2 usage, 3 configuration, 4 output, 5 corrupted
checkpoint, 6 checkpoint/config mismatch, 7 integrity failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .analytic import VARIANTS, mertens_window, primes_in_ap, psi_smooth, q_divides_s_survey
from .errors import AliquotError, ConfigError
from .exceptional import Thresholds
from .survey import SurveyConfig, run_survey


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(float(v)) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _number(text: str) -> int:
    # accepts 1e6 style bounds
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if v != int(v):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(v)


def _add_threshold_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold-mode", choices=("literal", "override"), default="literal")
    p.add_argument("--alpha", type=float, default=0.25,
                   help="exponent of the x**alpha cutoff for conditions A and C (override mode)")
    p.add_argument("--f-bound", type=float, default=10.0,
                   help="prime bound for condition F (override mode)")
    p.add_argument("--d-slack", type=Fraction, default=Fraction(1),
                   help="multiplier on the condition-D bound x P / 2n (override mode)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aliquot-omega", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("survey", help="moment survey of omega(s(n)) for n <= x_max")
    s.add_argument("--x-max", type=_number, required=True)
    s.add_argument("--checkpoints", type=_int_list, default=None)
    s.add_argument("--segment-size", type=_number, default=1 << 22)
    s.add_argument("--workers", type=int, default=1)
    _add_threshold_args(s)
    s.add_argument("--out", type=Path, default=Path("survey-out"))
    s.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eps-grid", type=_float_list, default=(0.25, 0.5))
    s.add_argument("--cross-checks", type=int, default=32,
                   help="sampled records re-derived through the slow path")
    s.add_argument("--resume", action="store_true",
                   help="continue from OUT/checkpoint.jsonl instead of starting over")

    p = sub.add_parser("psi", help="count of y-smooth n <= x")
    p.add_argument("x", type=float)
    p.add_argument("y", type=float)

    a = sub.add_parser("ap", help="prime counts in residue classes mod q")
    a.add_argument("X", type=_number)
    a.add_argument("q", type=int)

    m = sub.add_parser("mertens", help="sum of 1/p (or 1/(p-1)) over primes in (y, z]")
    m.add_argument("y", type=float)
    m.add_argument("z", type=float)
    m.add_argument("variant", choices=VARIANTS, nargs="?", default="reciprocal-p")

    q = sub.add_parser("qdiv", help="number of n <= x with q | s(n)")
    q.add_argument("x", type=_number)
    q.add_argument("q", type=int)
    _add_threshold_args(q)
    return parser


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def _emit(header: list[str], rows: list[list]) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])


def _survey(args) -> None:
    cfg = SurveyConfig(
        x_max=args.x_max,
        checkpoints=args.checkpoints,
        segment_size=args.segment_size,
        workers=args.workers,
        threshold_mode=args.threshold_mode,
        alpha=args.alpha,
        f_bound=args.f_bound,
        d_slack=args.d_slack,
        out_dir=args.out,
        output_format=args.format,
        seed=args.seed,
        eps_grid=args.eps_grid,
        cross_checks=args.cross_checks,
    )
    out = run_survey(cfg, resume=args.resume)
    print(f"wrote {out.result_path} ({len(out.rows)} rows; "
          f"{out.segments_computed} segments computed, {out.segments_reused} reused)")


def _thresholds(args, x: int) -> Thresholds:
    if args.threshold_mode == "literal":
        return Thresholds.literal(x)
    try:
        return Thresholds.override(x, args.alpha, args.f_bound, args.d_slack)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "survey":
            _survey(args)
        elif args.command == "psi":
            r = psi_smooth(args.x, args.y)
            _emit(["x", "y", "psi", "u", "de_bruijn_ref"], [[r.x, r.y, r.psi, r.u, r.de_bruijn_ref]])
        elif args.command == "ap":
            r = primes_in_ap(args.X, args.q)
            _emit(["X", "q", "a", "count", "pi_X", "discrepancy"],
                  [[r.X, r.q, a, c, r.pi_X, r.discrepancy] for a, c in r.counts.items()])
        elif args.command == "mertens":
            r = mertens_window(args.y, args.z, args.variant)
            _emit(["y", "z", "variant", "value", "reference"],
                  [[r.y, r.z, r.variant, r.value, r.reference]])
        elif args.command == "qdiv":
            if args.x < 1:
                raise ConfigError("x must be >= 1")
            r = q_divides_s_survey(args.x, args.q, _thresholds(args, args.x))
            _emit(["x", "q", "count", "count_restricted", "tau_q", "phi_q", "reference",
                   "implied_constant", "implied_constant_restricted", "threshold_mode"],
                  [[r.x, r.q, r.count, r.count_restricted, r.tau_q, r.phi_q, r.reference,
                    r.implied_constant, r.implied_constant_restricted, r.threshold_mode]])
    except AliquotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
