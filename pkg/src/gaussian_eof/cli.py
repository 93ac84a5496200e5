"""Command-line front end: ``gaussian-eof analyze | verify | sweep``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import suites
from .closed_form import eof_symmetric
from .errors import AsymmetricStateError, InvalidCovarianceError
from .symplectic import DEFAULT_TOL, StandardFormParams, tmss_cm

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_ASYMMETRIC = 3
EXIT_USAGE = 64
EXIT_DATAERR = 65

TOL_ENV = "GAUSSIAN_EOF_TOL"
CSV_COLUMNS = ("n", "m", "kx", "kp", "valid", "symmetric", "separable", "delta", "r_delta", "eof_bits")


class UsageError(Exception):
    pass


class DataFormatError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_tol():
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"{TOL_ENV}={raw!r} is not a number")


def parse_cm_text(text):
    """Parse ``"n kx kp"`` or sixteen whitespace-separated reals into a 4x4 matrix."""
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        col = 0
        for token in line.split():
            col = line.index(token, col) + 1
            try:
                values.append(float(token))
            except ValueError:
                raise DataFormatError(f"line {lineno}, column {col}: cannot parse {token!r} as a number")
            col += len(token) - 1
    if len(values) == 3:
        n, kx, kp = values
        return StandardFormParams.symmetric(n, kx, kp).to_matrix()
    if len(values) == 16:
        return np.array(values).reshape(4, 4)
    raise DataFormatError(f"expected 3 values (n kx kp) or 16 values (4x4 matrix), got {len(values)}")


def fmt_num(x, digits=12):
    x = float(x)
    if x != x:
        return "nan"
    if x == 0.0:
        x = 0.0  # drop negative zero
    return format(x, f".{digits}g")


def fmt_bool(b):
    return "" if b is None else ("true" if b else "false")


@dataclass
class Row:
    n: float
    m: float
    kx: float
    kp: float
    valid: bool
    symmetric: bool | None
    separable: bool | None
    delta: float
    r_delta: float
    eof_bits: float

    def cells(self, digits):
        out = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            out.append(fmt_bool(v) if isinstance(v, bool) or v is None else fmt_num(v, digits))
        return out


def analyze_matrix(gamma, tol):
    """Report row for one CM; raises the library errors for invalid or asymmetric input."""
    rep = eof_symmetric(gamma, tol=tol)
    sf = rep.standard_form
    return Row(sf.n, sf.m, sf.kx, sf.kp, rep.valid, rep.symmetric, rep.separable, rep.delta, rep.r_delta, rep.eof_bits)


def _render(row, fmt, digits):
    cells = row.cells(digits)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerow(cells)
        return buf.getvalue()
    if fmt == "json":
        record = {}
        for name, cell in zip(CSV_COLUMNS, cells):
            v = getattr(row, name)
            record[name] = v if isinstance(v, bool) else cell
        return json.dumps(record) + "\n"
    width = max(len(c) for c in CSV_COLUMNS)
    return "".join(f"{name:<{width}}  {cell}\n" for name, cell in zip(CSV_COLUMNS, cells))


def _emit(text, out):
    if out:
        with open(out, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_source(args):
    sources = [args.text is not None, args.input is not None, args.n is not None]
    if sum(sources) != 1:
        raise UsageError("give exactly one input: inline text, --input PATH, or --n/--kx/--kp")
    if args.text is not None:
        return parse_cm_text(args.text)
    if args.input is not None:
        try:
            if args.input == "-":
                text = sys.stdin.read()
            else:
                with open(args.input, encoding="utf-8") as fh:
                    text = fh.read()
        except OSError as exc:
            raise DataFormatError(f"cannot read {args.input}: {exc}")
        return parse_cm_text(text)
    if args.kx is None or args.kp is None:
        raise UsageError("--n requires --kx and --kp")
    return StandardFormParams.symmetric(args.n, args.kx, args.kp).to_matrix()


def cmd_analyze(args):
    gamma = _read_source(args)
    try:
        row = analyze_matrix(gamma, args.tol)
    except InvalidCovarianceError as exc:
        print(f"invalid covariance matrix: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AsymmetricStateError as exc:
        print(f"asymmetric state: {exc}", file=sys.stderr)
        return EXIT_ASYMMETRIC
    _emit(_render(row, args.format, args.digits), args.out)
    return EXIT_OK


def cmd_verify(args):
    name = args.suite
    if name == "lemma1":
        rep = suites.run_lemma1(seed=args.seed, trials=args.trials or 500, dim=args.dim or 8)
    elif name == "lemma2":
        rep = suites.run_lemma2(
            seed=args.seed, deltas=tuple(args.delta or (0.2, 0.5, 0.8)), dim=args.dim or 40, trials=args.trials or 1000
        )
    elif name == "prop1":
        rep = suites.run_prop1(seed=args.seed, trials=args.trials or 1000, max_dim=args.dim or 12)
    elif name == "recursion":
        rep = suites.run_recursion(rs=tuple(args.r or (0.1, 0.5, 1.0, 2.0)), perturb=args.perturb, n_max=args.steps)
    elif name == "d0":
        rep = suites.run_d0(
            args.n if args.n is not None else 2.0,
            args.kx if args.kx is not None else 1.5,
            args.kp if args.kp is not None else 1.5,
            monte_carlo=args.mc,
            samples=args.samples,
            dim=args.dim or 25,
            seed=args.seed,
        )
    else:
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(suites.SUITES)}")
    text = "\n".join(rep.lines()) + "\n"
    _emit(text, args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def sweep_rows(axis, lo, hi, steps, n=2.0, kx=1.0, kp=1.0, tol=DEFAULT_TOL, jobs=1):
    """Rows of a parameter sweep, ordered by grid index.

    ``axis`` is ``n``, ``kx``, ``kp``, ``k`` (``kx = kp = k``) or ``r``
    (pure two-mode squeezed states).  Invalid points are kept and flagged.
    """
    if steps < 1:
        raise UsageError("steps must be >= 1")
    if steps > 1 and not lo < hi:
        raise UsageError("sweep needs lo < hi")
    grid = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo], dtype=float)

    def point(value):
        value = float(value)
        if axis == "r":
            if value < 0:
                return Row(np.nan, np.nan, np.nan, np.nan, False, None, None, np.nan, np.nan, np.nan)
            gamma = tmss_cm(value)
            params = None
        else:
            p = {"n": n, "kx": kx, "kp": kp}
            if axis == "k":
                p["kx"] = p["kp"] = value
            else:
                p[axis] = value
            params = StandardFormParams.symmetric(p["n"], p["kx"], p["kp"])
            gamma = params.to_matrix()
        try:
            return analyze_matrix(gamma, tol)
        except InvalidCovarianceError:
            return Row(params.n, params.m, params.kx, params.kp, False, True, None, np.nan, np.nan, np.nan)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(point, grid))
    return [point(v) for v in grid]


def cmd_sweep(args):
    rows = sweep_rows(args.axis, args.lo, args.hi, args.steps, args.n, args.kx, args.kp, args.tol, args.jobs)
    if not any(r.valid for r in rows):
        print("warning: no valid covariance matrix in the sweep range", file=sys.stderr)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.cells(args.digits))
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def build_parser():
    tol_help = f"numerical tolerance (default {DEFAULT_TOL:g}, or ${TOL_ENV})"
    parser = _Parser(prog="gaussian-eof", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help=tol_help)
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument("--digits", type=int, default=12, help="significant digits in output (default 12)")

    p = sub.add_parser("analyze", parents=[common], help="EoF report for one covariance matrix")
    p.add_argument("text", nargs="?", help='inline input: "n kx kp" or 16 matrix entries')
    p.add_argument("-i", "--input", help="file with a 4x4 matrix or 'n kx kp' ('-' for stdin)")
    p.add_argument("--n", type=float)
    p.add_argument("--kx", type=float)
    p.add_argument("--kp", type=float)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("suite", help=f"one of: {', '.join(suites.SUITES)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int)
    p.add_argument("--dim", type=int, help="truncation dimension")
    p.add_argument("--delta", type=float, action="append", help="lemma2: target delta (repeatable)")
    p.add_argument("--r", type=float, action="append", help="recursion: r value (repeatable)")
    p.add_argument("--perturb", type=float, default=1e-3, help="recursion: offset of x0 from exp(-2r)")
    p.add_argument("--steps", type=int, default=1000, help="recursion: iteration count")
    p.add_argument("--n", type=float)
    p.add_argument("--kx", type=float)
    p.add_argument("--kp", type=float)
    p.add_argument("--mc", action="store_true", help="d0: add the Monte Carlo cross-check")
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="CSV table of EoF over a parameter range")
    p.add_argument("--axis", choices=("n", "k", "kx", "kp", "r"), required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--n", type=float, default=2.0)
    p.add_argument("--kx", type=float, default=1.0)
    p.add_argument("--kp", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.tol is None:
            args.tol = default_tol()
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataFormatError as exc:
        print(f"data format error: {exc}", file=sys.stderr)
        return EXIT_DATAERR


if __name__ == "__main__":
    sys.exit(main())
