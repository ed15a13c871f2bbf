"""``polyfact``: numerical factorization from the command line.

    polyfact 'x^2 - 1' --tol 1e-10
    polyfact --in poly.txt --tol 1e-5 --format json
    echo 'x*y + 2*x + y + 2' | polyfact - --tol 1e-12

Exit status is 0 on success, 1 for unreadable input, 2 when factoring fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from .pipeline import Config, FactorizationFailed, forward_report, numerical_factor
from .polystr import PolySyntaxError, format_number, format_poly, format_row, parse_poly, parse_row
from .refine import NumFactResult
from .split import SplitError
from .structure import StructureError, dag_to_dot, dag_to_json, parse_structure

JSON_DIGITS = 15
ROW_DIGITS = 12


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyfact", description="Numerical factorization of a polynomial with inexact coefficients.")
    ap.add_argument("poly", nargs="?", help="polynomial string, or '-' to read stdin")
    ap.add_argument("--in", dest="infile", metavar="FILE", help="read the polynomial from FILE")
    ap.add_argument("--tol", type=float, required=True, help="backward error tolerance epsilon")
    ap.add_argument("--format", choices=("row", "json"), default="row")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--structure", help="structure hint, e.g. '(1,1,3) (3,2,1)'")
    ap.add_argument("--exhaustive", action="store_true", help="search every structure of the degree (small degrees only)")
    ap.add_argument("--normalize", action="store_true", help="divide by the coefficient norm so --tol is relative")
    ap.add_argument("--reference", help="known factorization '(a) * (f)^k * ...' for a forward error report")
    ap.add_argument("--dag", choices=("dot", "json"), help="print the structure lattice of the input degree and exit")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def _read_input(args) -> str:
    if args.infile is not None:
        if args.poly is not None:
            raise PolySyntaxError("give either a polynomial or --in, not both", 0)
        with open(args.infile) as fh:
            return fh.read()
    if args.poly is None:
        raise PolySyntaxError("no polynomial given", 0)
    if args.poly == "-":
        return sys.stdin.read()
    return args.poly


def _finite(x: float):
    return x if math.isfinite(x) else None


def _complex_json(c: complex, digits: int):
    if c.imag == 0:
        return float(format_number(c.real, digits))
    return {"re": float(format_number(c.real, digits)), "im": float(format_number(c.imag, digits))}


def result_to_json(res: NumFactResult, forward: float | None = None) -> dict:
    out = {
        "factors": [
            {"poly": format_poly(p, JSON_DIGITS), "multiplicity": k} for p, k in res.factorization.factors
        ],
        "alpha": _complex_json(complex(res.factorization.alpha), JSON_DIGITS),
        "backward_error": res.backward_error,
        "sin_backward": res.sin_backward,
        "condition_bound": _finite(res.condition_number),
        "structure": str(res.structure),
        "codim": res.codim,
        "iterations": res.iterations,
        "converged": bool(res.converged),
        "seed": res.seed,
    }
    if forward is not None:
        out["forward_error"] = forward
    if res.notes:
        out["notes"] = list(res.notes)
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        text = _read_input(args)
        f = parse_poly(text.strip())
        hint = parse_structure(args.structure) if args.structure else None
        ref = parse_row(args.reference, f.vars) if args.reference else None
    except (PolySyntaxError, StructureError, OSError) as exc:
        print(f"polyfact: {exc}", file=sys.stderr)
        return 1

    if args.dag:
        print(dag_to_dot(f.degree) if args.dag == "dot" else dag_to_json(f.degree))
        return 0
    if f.is_constant():
        # nothing to factor; the constant is alpha
        c = complex(f.coeff((0,) * f.nvars))
        if args.format == "row":
            print(f"({format_poly(f, ROW_DIGITS)})")
        else:
            print(json.dumps({"factors": [], "alpha": _complex_json(c, JSON_DIGITS)}))
        return 0
    try:
        cfg = Config(args.tol, seed=args.seed, structure_hint=hint, normalize=args.normalize, exhaustive=args.exhaustive)
        res = numerical_factor(f, cfg)
    except (FactorizationFailed, SplitError, StructureError, ValueError) as exc:
        print(f"polyfact: factorization failed: {exc}", file=sys.stderr)
        return 2
    forward = forward_report(res.factorization, ref) if ref is not None else None
    if args.format == "json":
        print(json.dumps(result_to_json(res, forward), indent=2))
    else:
        print(format_row(res, ROW_DIGITS))
        if forward is not None:
            print(f"forward error {forward:.3g}", file=sys.stderr)
    for note in res.notes:
        logging.getLogger("polyfact").info(note)
    return 0


if __name__ == "__main__":
    sys.exit(main())
