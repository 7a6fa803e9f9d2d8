"""Command-line front end.

Subcommands ``enclose``, ``globalmin``, ``integrate``, ``jensen`` and ``mm``
print one result record to stdout (JSON by default) and, with ``--trace``,
write the per-step trace as CSV. Exit status is 2 for usage errors, 1 for
domain or resource errors and 0 otherwise.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import re
import sys

import numpy as np

from .apps import (
    branch_and_bound,
    integrate_enclosure,
    integration_trace,
    jensen_bounds,
    jensen_trace,
    mm_minimize,
    parse_distribution,
)
from .enclosure1d import autobound_1d
from .enclosurend import autobound_nd
from .exprgraph import DomainError, ParseError, parse
from .interval import Interval, Rounding
from .tensorcore import BILINEAR_STRATEGIES, ResourceLimitError

ROUNDING_ENV = "AUTOBOUND_ROUNDING"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output formatting
def format_real(x: float, digits: int = 17) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = f"{x:.{digits}g}"
    # keep a float marker so readers do not see integers
    if re.fullmatch(r"-?\d+", s):
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every real printed to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return "true" if obj is True else "false" if obj is False else "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_real(obj)
    if isinstance(obj, str):
        return _json_str(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _json_str(s: str) -> str:
    import json

    return json.dumps(s)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_real(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _iv(I: Interval) -> dict:
    return I.to_json()


def _short(x: float) -> str:
    return f"{float(x):.6g}"


def _short_iv(I: Interval) -> str:
    return f"[{_short(I.lo)}, {_short(I.hi)}]"


# ---------------------------------------------------------------------------
# argument types
def _real(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite real, got {text!r}")
    return v


def _positive_real(text: str) -> float:
    v = _real(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive real, got {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _reals(text: str) -> list:
    parts = [p for p in text.split(",")]
    return [_real(p.strip()) for p in parts]


def _pair(text: str) -> tuple[float, float]:
    vals = _reals(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}")
    lo, hi = vals
    if lo > hi:
        raise argparse.ArgumentTypeError(f"lo must not exceed hi in {text!r}")
    return lo, hi


def _trust(text: str) -> list:
    """``lo,hi`` or ``lo,hi;lo,hi;...`` for one pair per coordinate."""
    return [_pair(p) for p in text.split(";")]


def _rounding(text: str) -> Rounding:
    try:
        return Rounding.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _distribution(text: str):
    try:
        return parse_distribution(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="taylorenclose", description="Polynomial enclosures and applications.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, degree=2):
        p.add_argument("--expr", required=True, help="expression in x (or x0, x1, ...)")
        p.add_argument("--format", choices=("json", "csv", "text"), default="json")
        p.add_argument("--rounding", type=_rounding, default=None,
                       help=f"fast or outward; defaults to ${ROUNDING_ENV} or fast")
        p.add_argument("--degree", type=_positive_int, default=degree)

    p = sub.add_parser("enclose", help="polynomial enclosure of an expression")
    common(p)
    p.add_argument("--x0", type=_reals, required=True, help="expansion point, comma separated for d > 1")
    p.add_argument("--trust", type=_trust, required=True, help="lo,hi or lo,hi;lo,hi;...")
    p.add_argument("--strategy", choices=sorted(BILINEAR_STRATEGIES), default=None)

    p = sub.add_parser("globalmin", help="branch-and-bound global minimisation")
    common(p)
    p.add_argument("--trust", type=_pair, required=True)
    p.add_argument("--tol", type=_positive_real, default=1e-9)
    p.add_argument("--max-steps", type=_positive_int, default=1000)
    p.add_argument("--trace")

    p = sub.add_parser("integrate", help="verified integral over the trust interval")
    common(p)
    p.add_argument("--trust", type=_pair, required=True)
    p.add_argument("--cells", type=_positive_int, default=16)
    p.add_argument("--trace", help="CSV of n,lo,hi for n = 1, 2, 4, ... up to --cells")

    p = sub.add_parser("jensen", help="bounds on the Jensen gap")
    common(p)
    p.add_argument("--dist", type=_distribution, required=True, help="uniform:a,b or discrete:x:w,...")
    p.add_argument("--trace", help="CSV of degree,gap_lo,gap_hi for degrees 2 .. --degree")

    p = sub.add_parser("mm", help="majorization-minimisation with quadratic majorizers")
    common(p)
    p.add_argument("--x0", type=_real, required=True)
    p.add_argument("--trust-radius", type=_positive_real, required=True)
    p.add_argument("--steps", type=_positive_int, default=10)
    p.add_argument("--trace")
    return parser


_NEG_VALUE = re.compile(r"-[\d.]")


def _join_negative_values(argv):
    """Rewrite ``--flag -1,1`` to ``--flag=-1,1`` so values may start with a minus."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and _NEG_VALUE.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


# ---------------------------------------------------------------------------
# validation and commands
def _resolve_rounding(args) -> Rounding:
    if args.rounding is not None:
        return args.rounding
    env = os.environ.get(ROUNDING_ENV)
    if env:
        try:
            return Rounding.parse(env)
        except ValueError as exc:
            raise UsageError(f"${ROUNDING_ENV}: {exc}") from None
    return Rounding.FAST


def _graph(args):
    try:
        g = parse(args.expr)
    except ParseError as exc:
        raise UsageError(f"--expr: {exc}") from None
    if args.command != "enclose" and g.dim != 1:
        raise UsageError(f"{args.command} needs a univariate expression in x")
    return g


def _validate(args, g):
    if args.command == "enclose":
        d = g.dim
        if len(args.x0) != d:
            raise UsageError(f"--x0 has {len(args.x0)} values but the expression has {d} inputs")
        trust = args.trust
        if len(trust) == 1:
            trust = trust * d
        if len(trust) != d:
            raise UsageError(f"--trust has {len(trust)} pairs but the expression has {d} inputs")
        for x, (lo, hi) in zip(args.x0, trust):
            if not lo <= x <= hi:
                raise UsageError(f"--x0 value {x} lies outside the trust interval [{lo}, {hi}]")
        args.trust = trust
    elif args.command in ("globalmin", "integrate"):
        lo, hi = args.trust
        if not lo < hi:
            raise UsageError("--trust needs lo < hi")
        if args.command == "globalmin" and args.degree != 2:
            raise UsageError("globalmin uses degree-2 enclosures; omit --degree or pass 2")
    elif args.command == "jensen":
        if args.degree < 2:
            raise UsageError("jensen needs --degree >= 2")
    elif args.command == "mm" and args.degree != 2:
        raise UsageError("mm uses degree-2 majorizers; omit --degree or pass 2")


def _cmd_enclose(args, g, rounding):
    if g.dim == 1:
        enc = autobound_1d(g, args.x0[0], Interval(*args.trust[0]), args.degree, rounding)
        record = {"expr": args.expr, "degree": args.degree, "rounding": rounding.value, **enc.to_json()}
        rows = [(i, c.lo, c.hi) for i, c in enumerate(enc.coeffs)]
        text = "\n".join(f"c{i} = {_short_iv(c)}" for i, c in enumerate(enc.coeffs))
    else:
        enc = autobound_nd(g, np.array(args.x0), args.trust, args.degree,
                           batched_strategy=args.strategy, rounding=rounding)
        record = {"expr": args.expr, "degree": args.degree, "rounding": rounding.value, **enc.to_json()}
        rows = []
        for i, c in enumerate(enc.coeffs):
            for idx in np.ndindex(c.shape):
                rows.append((i, ";".join(map(str, idx)), float(c.lo[idx]), float(c.hi[idx])))
        text = "\n".join(f"c{i}[{idx}] = [{_short(lo)}, {_short(hi)}]" for i, idx, lo, hi in rows)
        return record, (("degree", "index", "lo", "hi"), rows), text, None
    return record, (("degree", "lo", "hi"), rows), text, None


def _cmd_globalmin(args, g, rounding):
    res = branch_and_bound(g, Interval(*args.trust), args.tol, args.max_steps, rounding)
    record = {
        "expr": args.expr, "trust": Interval(*args.trust).to_json(), "xbest": res.xbest,
        "fbest": res.fbest, "lower_bound": res.lower_bound, "gap": res.gap,
        "steps": res.steps, "converged": res.converged,
    }
    table = (("step", "lb", "ub"), [tuple(r) for r in res.trace])
    text = (f"xbest = {_short(res.xbest)}\nfbest = {_short(res.fbest)}\n"
            f"lower bound = {_short(res.lower_bound)}\nsteps = {res.steps}"
            + ("" if res.converged else "\nnot converged"))
    return record, table, text, table


def _cmd_integrate(args, g, rounding):
    a, b = args.trust
    I = integrate_enclosure(g, a, b, args.cells, args.degree, rounding)
    record = {"expr": args.expr, "a": a, "b": b, "cells": args.cells, "degree": args.degree,
              "integral": _iv(I), "width": I.hi - I.lo}
    trace = None
    if args.trace:
        ns = [1 << j for j in range(args.cells.bit_length()) if (1 << j) <= args.cells]
        if ns[-1] != args.cells:
            ns.append(args.cells)
        trace = (("n", "lo", "hi"), [(n, J.lo, J.hi) for n, J in integration_trace(g, a, b, ns, args.degree, rounding)])
    table = (("n", "lo", "hi"), [(args.cells, I.lo, I.hi)])
    text = f"integral in {_short_iv(I)} (width {_short(I.hi - I.lo)})"
    return record, table, text, trace


def _cmd_jensen(args, g, rounding):
    res = jensen_bounds(g, args.dist, args.degree, rounding)
    record = {"expr": args.expr, "degree": args.degree, "mean": res.mean,
              "expectation": _iv(res.expectation), "gap": _iv(res.gap)}
    trace = None
    if args.trace:
        rows = [(k, r.gap.lo, r.gap.hi) for k, r in jensen_trace(g, args.dist, range(2, args.degree + 1), rounding)]
        trace = (("degree", "gap_lo", "gap_hi"), rows)
    table = (("degree", "gap_lo", "gap_hi"), [(args.degree, res.gap.lo, res.gap.hi)])
    text = f"E[f(X)] in {_short_iv(res.expectation)}\ngap in {_short_iv(res.gap)}"
    return record, table, text, trace


def _cmd_mm(args, g, rounding):
    tr = mm_minimize(g, args.x0, args.trust_radius, args.steps, rounding=rounding)
    record = {
        "expr": args.expr, "x0": args.x0, "trust_radius": args.trust_radius, "x": tr.x, "f": tr.f,
        "iterates": [{"t": s.t, "x": s.x, "f": s.f, "majorizer": list(s.majorizer)} for s in tr.steps],
    }
    table = (("t", "x", "f"), tr.rows())
    text = f"x = {_short(tr.x)}\nf = {_short(tr.f)}\niterations = {len(tr.steps) - 1}"
    return record, table, text, table


_COMMANDS = {
    "enclose": _cmd_enclose,
    "globalmin": _cmd_globalmin,
    "integrate": _cmd_integrate,
    "jensen": _cmd_jensen,
    "mm": _cmd_mm,
}


def run(argv, stdout=None, stderr=None) -> int:
    """Run the CLI on ``argv`` (without the program name); returns the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_values(list(argv)))
        rounding = _resolve_rounding(args)
        g = _graph(args)
        _validate(args, g)
    except UsageError as exc:
        print(str(exc), file=stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        record, table, text, trace = _COMMANDS[args.command](args, g, rounding)
    except (DomainError, ResourceLimitError) as exc:
        print(f"taylorenclose: error: {exc}", file=stderr)
        return 1
    except ValueError as exc:
        print(f"taylorenclose: error: {exc}", file=stderr)
        return 1
    if getattr(args, "trace", None) and trace is not None:
        with open(args.trace, "w", newline="") as fh:
            fh.write(_csv_text(*trace))
    if args.format == "json":
        stdout.write(dumps(record) + "\n")
    elif args.format == "csv":
        stdout.write(_csv_text(*table))
    else:
        stdout.write(text + "\n")
    return 0


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
