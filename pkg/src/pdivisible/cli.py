"""Command-line front end.

Exit codes: 0 success, 1 invalid input or usage, 2 suite failure or engine disagreement.
"""

from __future__ import annotations

import argparse
import json
import sys

from .exactnum.scalars import parse_rational
from .isocrystal import CrystalError, thm53_extension
from .permcrystal import DatumError
from .report import (
    crystal_from_json,
    crystal_report,
    datum_from_json,
    datum_report,
    dumps,
    has_disagreement,
    render,
)
from .verify import SUITES, enumerate_classes, run_suite

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for failed suites here
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdivisible", description="Invariants of F-cyclic and matrix Dieudonné modules.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--format", choices=("json", "csv", "table"), default="json")
        return p

    inv = common(sub.add_parser("invariants", help="invariant report for one datum or crystal file"))
    src = inv.add_mutually_exclusive_group(required=True)
    src.add_argument("--datum", help="JSON file {r, pi, marked} ('-' for stdin)")
    src.add_argument("--crystal", help="JSON file {p, rank, matrix, splitting?, dieudonne} ('-' for stdin)")
    inv.add_argument("--prime", type=int, default=2, help="prime for the matrix engine on data (default 2)")
    inv.add_argument("--window-override", type=int, default=None,
                     help="alpha/beta/delta window for crystals without a quasi-special period")

    enum = common(sub.add_parser("enumerate", help="all F-cyclic classes with given codimension and dimension"))
    enum.add_argument("c", type=int)
    enum.add_argument("d", type=int)
    enum.add_argument("--prime", type=int, default=2)
    enum.add_argument("--full", action="store_true", help="emit full reports instead of summary rows")

    ver = common(sub.add_parser("verify", help="run a verification suite"))
    ver.add_argument("suite", choices=sorted(SUITES))
    _suite_flags(ver)

    cross = common(sub.add_parser("crosscheck", help="engine equivalence over all classes up to a rank"))
    _suite_flags(cross)

    ext = common(sub.add_parser("extension", help="the glued crystal with slopes 1/d and (d-1)/d"))
    ext.add_argument("--p", type=int, required=True)
    ext.add_argument("--d", type=int, required=True)
    ext.add_argument("--gamma", default="1", help="unit rational gamma (default 1)")
    return parser


def _suite_flags(p) -> None:
    p.add_argument("--max-rank", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--prime", type=int)
    p.add_argument("--primes", type=_int_list)
    p.add_argument("--jobs", type=int, default=1)


def _suite_params(args) -> dict:
    params = {}
    for key in ("max_rank", "seed", "samples", "prime", "primes"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


def _load_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON: {exc}") from None
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None


def _cmd_invariants(args, out) -> int:
    if args.datum is not None:
        report = datum_report(datum_from_json(_load_json(args.datum)), args.prime)
    else:
        if args.window_override is not None and args.window_override < 1:
            raise UsageError("--window-override must be positive")
        report = crystal_report(crystal_from_json(_load_json(args.crystal)), args.window_override)
    out.write(render(report, args.format))
    return EXIT_FAILED if has_disagreement(report) else EXIT_OK


def _cmd_enumerate(args, out) -> int:
    if args.c < 0 or args.d < 0 or args.c + args.d < 1:
        raise UsageError("need c, d >= 0 and c + d >= 1")
    reports = [datum_report(x, args.prime) for x in enumerate_classes(args.c, args.d)]
    if args.full:
        obj = {"c": str(args.c), "d": str(args.d), "classes": reports}
    else:
        obj = {"c": str(args.c), "d": str(args.d), "classes": [
            {k: rep[k] for k in ("input", "necklace_class", "isomorphism_key", "level_torsion",
                                 "epsilon", "minimal", "special")}
            for rep in reports
        ]}
    out.write(render(obj, args.format))
    return EXIT_FAILED if has_disagreement(obj) else EXIT_OK


def _write_suite(result, fmt: str, out) -> int:
    if fmt == "csv":
        out.write(result.to_csv())
    elif fmt == "json":
        out.write(dumps(result.to_json()))
    else:
        out.write(render(result.to_json(), "table"))
    return EXIT_OK if result.ok else EXIT_FAILED


def _cmd_verify(args, out) -> int:
    return _write_suite(run_suite(args.suite, _suite_params(args), jobs=args.jobs), args.format, out)


def _cmd_crosscheck(args, out) -> int:
    return _write_suite(run_suite("crosscheck", _suite_params(args), jobs=args.jobs), args.format, out)


def _cmd_extension(args, out) -> int:
    f = thm53_extension(args.p, args.d, parse_rational(args.gamma))
    report = crystal_report(f)
    out.write(render(report, args.format))
    return EXIT_FAILED if has_disagreement(report) else EXIT_OK


COMMANDS = {
    "invariants": _cmd_invariants,
    "enumerate": _cmd_enumerate,
    "verify": _cmd_verify,
    "crosscheck": _cmd_crosscheck,
    "extension": _cmd_extension,
}


def dispatch(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        return COMMANDS[args.command](args, out)
    except (UsageError, DatumError, CrystalError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INVALID


def main() -> None:
    sys.exit(dispatch())
