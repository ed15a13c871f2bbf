"""Polynomial strings: parsing ``'-4 - 12*x*y + 8*z^3'`` and printing back.

Grammar (whitespace ignored)::

    expression  := term (('+' | '-') term)*
    term        := [sign] [coefficient] ('*'? var ('^' int)?)*
    coefficient := decimal | scientific | '(' python-complex ')'
    var         := letter (letter | digit | '_')*

The parenthesised complex literal (``(1.5-2j)``) only exists so that complex
factors survive a print/parse round trip.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .polycore import Factorization, MultiPoly


class PolySyntaxError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<cplx>\(\s*[-+]?[0-9.]+(?:[eE][-+]?\d+)?\s*[-+]\s*[0-9.]+(?:[eE][-+]?\d+)?j\s*\))
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<var>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[-+*^])
    """,
    re.VERBOSE,
)


@dataclass
class ParseTree:
    """Terms as (signed coefficient text, [(var, exponent), ...])."""

    terms: list[tuple[str, list[tuple[str, int]]]]

    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for _, mono in self.terms:
            for v, _ in mono:
                seen.setdefault(v)
        return tuple(seen)


def _tokenize(s: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if m is None:
            raise PolySyntaxError(f"unexpected character {s[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), pos))
        pos = m.end()
    return toks


def parse_tree(s: str) -> ParseTree:
    toks = _tokenize(s)
    if not toks:
        raise PolySyntaxError("empty input", 0)
    terms = []
    i = 0
    n = len(toks)

    def peek():
        return toks[i] if i < n else ("end", "", len(s))

    while True:
        sign = "+"
        kind, text, pos = peek()
        if kind == "op" and text in "+-":
            sign = text
            i += 1
            kind, text, pos = peek()
        coef = None
        if kind in ("num", "cplx"):
            coef = text.replace(" ", "")
            i += 1
        mono: list[tuple[str, int]] = []
        while True:
            kind, text, pos = peek()
            if kind == "op" and text == "*":
                if coef is None and not mono:
                    raise PolySyntaxError("term starts with '*'", pos)
                i += 1
                kind, text, pos = peek()
                if kind != "var":
                    raise PolySyntaxError("expected a variable after '*'", pos)
            elif kind != "var":
                break
            i += 1
            exp = 1
            k2, t2, p2 = peek()
            if k2 == "op" and t2 == "^":
                i += 1
                k3, t3, p3 = peek()
                if k3 != "num" or not t3.isdigit():
                    raise PolySyntaxError("expected a nonnegative integer exponent", p3)
                exp = int(t3)
                i += 1
            mono.append((text, exp))
        if coef is None and not mono:
            raise PolySyntaxError("expected a coefficient or variable", pos)
        terms.append((("-" if sign == "-" else "") + (coef or "1"), mono))
        kind, text, pos = peek()
        if kind == "end":
            break
        if not (kind == "op" and text in "+-"):
            raise PolySyntaxError(f"unexpected {text!r}", pos)
    return ParseTree(terms)


def _coef_value(text: str) -> complex:
    neg = text.startswith("-")
    body = text[1:] if neg else text
    v = complex(body.strip("()")) if body.startswith("(") else float(body)
    return -v if neg else v


def parse_poly(s: str, vars: Sequence[str] | None = None) -> MultiPoly:
    """Parse a polynomial string; variables are ordered by first appearance.

    ``vars`` fixes the variable order (extra names are allowed, missing ones
    are an error).
    """
    tree = parse_tree(s)
    found = tree.variables()
    if vars is None:
        vars = found or ("x",)
    else:
        vars = tuple(vars)
        missing = [v for v in found if v not in vars]
        if missing:
            raise PolySyntaxError(f"unknown variables {missing}", 0)
    index = {v: i for i, v in enumerate(vars)}
    terms: dict[tuple[int, ...], complex] = {}
    for coef, mono in tree.terms:
        e = [0] * len(vars)
        for v, k in mono:
            e[index[v]] += k
        e = tuple(e)
        terms[e] = terms.get(e, 0) + _coef_value(coef)
    return MultiPoly(tuple(vars), terms)


# -- printing -----------------------------------------------------------------

def format_number(x: float, digits: int | None = None) -> str:
    if digits is None:
        return repr(float(x))
    s = f"{x:.{digits}g}"
    return s


def _format_coef(c: complex, digits: int | None) -> str:
    if c.imag == 0:
        return format_number(c.real, digits)
    re_s = format_number(c.real, digits)
    im = c.imag
    sign = "-" if im < 0 else "+"
    return f"({re_s}{sign}{format_number(abs(im), digits)}j)"


def format_monomial(vars: Sequence[str], e: Sequence[int]) -> str:
    parts = []
    for v, k in zip(vars, e):
        if k == 1:
            parts.append(v)
        elif k > 1:
            parts.append(f"{v}^{k}")
    return "*".join(parts)


def format_poly(p: MultiPoly, digits: int | None = None, compact: bool = False) -> str:
    """Terms in descending lex order; ``digits=None`` gives round-trip exact text."""
    if p.is_zero():
        return "0"
    join = "" if compact else " "
    out = []
    for e in sorted(p.terms, reverse=True):
        c = p.terms[e]
        mono = format_monomial(p.vars, e)
        neg = c.imag == 0 and c.real < 0
        mag = complex(-c.real, 0) if neg else c
        if mono and mag == 1:
            body = mono
        else:
            body = _format_coef(mag, digits)
            if mono:
                body = f"{body}*{mono}"
        if not out:
            out.append(("-" if neg else "") + body)
        else:
            out.append(f"{join}{'-' if neg else '+'}{join}{body}")
    return "".join(out)


def _factor_key(p: MultiPoly):
    deg = p.degree
    lead = max(p.terms)
    return (sum(deg), deg, lead)


def format_row(result, digits: int = 12, compact: bool = False) -> str:
    """``(alpha) * (f1)^k1 * (f2) * ...``; accepts a Factorization or a result object."""
    F: Factorization = getattr(result, "factorization", result)
    a = _format_coef(F.alpha, digits)
    parts = [a if a.startswith("(") else f"({a})"]
    for p, k in sorted(F.factors, key=lambda pk: _factor_key(pk[0])):
        s = f"({format_poly(p, digits, compact)})"
        if k != 1:
            s += f"^{k}"
        parts.append(s)
    return " * ".join(parts)


_COMPLEX_BODY = re.compile(r"\s*[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?[+-](\d+\.?\d*|\.\d+)([eE][+-]?\d+)?j\s*")


def parse_row(s: str, vars: Sequence[str] | None = None) -> Factorization:
    """Inverse of :func:`format_row` for ``(alpha) * (f)^k * ...`` strings."""
    # a complex constant factor prints as "(1+2j)", so its body needs its parentheses back
    chunks = [(f"({b})" if _COMPLEX_BODY.fullmatch(b) else b, k) for b, k in _split_row(s)]
    if not chunks:
        raise PolySyntaxError("empty factorization", 0)
    alpha = 1 + 0j
    factors = []
    polys = [(parse_tree(body), k) for body, k in chunks]
    if vars is None:
        seen: dict[str, None] = {}
        for tree, _ in polys:
            for v in tree.variables():
                seen.setdefault(v)
        vars = tuple(seen) or ("x",)
    for (body, k), (tree, _) in zip(chunks, polys):
        p = parse_poly(body, vars)
        if p.is_constant():
            alpha *= p.coeff((0,) * len(vars)) ** k
        else:
            factors.append((p, k))
    return Factorization(alpha, tuple(factors))


def _split_row(s: str) -> list[tuple[str, int]]:
    out = []
    i = 0
    s = s.strip()
    while i < len(s):
        while i < len(s) and s[i] in " *":
            i += 1
        if i >= len(s):
            break
        if s[i] != "(":
            raise PolySyntaxError("expected '('", i)
        depth = 0
        j = i
        while j < len(s):
            if s[j] == "(":
                depth += 1
            elif s[j] == ")":
                depth -= 1
                if depth == 0:
                    break
            j += 1
        if depth:
            raise PolySyntaxError("unbalanced parenthesis", i)
        body = s[i + 1 : j]
        j += 1
        k = 1
        m = re.match(r"\s*\^\s*(\d+)", s[j:])
        if m:
            k = int(m.group(1))
            j += m.end()
        out.append((body, k))
        i = j
    return out
