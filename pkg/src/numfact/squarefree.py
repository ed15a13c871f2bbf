"""Numerical squarefree factorization by a directional-derivative GCD sweep.

With ``u = gcd(f, D f)``, ``f = u v`` and ``D f = u w`` for a random direction
``D``, the squarefree part of multiplicity ``l`` is ``gcd(v, l * D v - w)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numgcd import numerical_gcd
from .polycore import Factorization, MultiPoly, dir_derivative, expand, lex_pack, tuple_add


class SweepInconsistent(RuntimeError):
    pass


@dataclass
class SquarefreeResult:
    alpha: complex
    parts: list[tuple[MultiPoly, int]]
    direction: np.ndarray
    residual: float

    def factorization(self) -> Factorization:
        return Factorization(self.alpha, tuple(self.parts))


def random_direction(ell: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(ell) + 1j * rng.standard_normal(ell)
    return z / np.linalg.norm(z)


def _fit_alpha(f: MultiPoly, parts) -> tuple[complex, float]:
    g = expand(Factorization(1.0, tuple(parts)))
    n = tuple(max(a, b) for a, b in zip(g.degree, f.degree))
    gv, fv = lex_pack(g, n), lex_pack(f, n)
    alpha = np.vdot(gv, fv) / np.vdot(gv, gv)
    return complex(alpha), float(np.linalg.norm(fv - alpha * gv))


def sweep_tolerances(tol: float, loosest: float = 1e-3, step: float = 100.0) -> list[float]:
    """tol, step*tol, ... up to ``loosest``: cofactors of a high-degree gcd are far less
    accurate than its residual, so the multiplicity sweep may need a looser tolerance."""
    out = [tol]
    while out[-1] * step <= max(loosest, tol):
        out.append(out[-1] * step)
    return out


def _sweep(v: MultiPoly, w: MultiPoly, target, z: np.ndarray, tol: float, seed: int):
    dv = dir_derivative(v, z)
    total = (0,) * v.nvars
    parts = []
    max_l = sum(target)
    for l in range(1, max_l + 1):
        if v.is_constant():
            break
        s = l * dv - w
        if s.norm() <= tol * (l * dv.norm() + w.norm()):
            h = v.normalized()
        else:
            h = numerical_gcd(v, s, tol, seed + l).gcd
        if not h.is_constant():
            parts.append((h, l))
            total = tuple_add(total, tuple(l * e for e in h.degree))
            if total == target:
                break
    return parts, total


def squarefree_factor(f: MultiPoly, tol: float, seed: int = 0, retries: int = 3) -> SquarefreeResult:
    """Squarefree parts ``(h_j, k_j)`` with ``f ~ alpha * prod h_j**k_j``, multiplicities increasing."""
    if f.is_constant():
        raise ValueError("squarefree_factor needs a nonconstant polynomial")
    if tol <= 0:
        raise ValueError("tol must be positive")
    live = f.variables_used()
    for attempt in range(retries + 1):
        if len(live) == 1:
            z = np.zeros(f.nvars, dtype=complex)
            z[live[0]] = 1
        else:
            rng = np.random.default_rng([seed, attempt])
            z = np.zeros(f.nvars, dtype=complex)
            z[list(live)] = random_direction(len(live), rng)
        u = numerical_gcd(f, dir_derivative(f, z), tol, seed + 101 * attempt)
        for t in sweep_tolerances(tol, loosest=max(1e-2, tol), step=10.0):
            parts, total = _sweep(u.cofactor_p, u.cofactor_q, f.degree, z, t, seed + 101 * attempt)
            if total == f.degree:
                parts.sort(key=lambda hk: hk[1])
                alpha, res = _fit_alpha(f, parts)
                # degrees can add up by accident at a loose tolerance; the product must fit too
                if res <= 10 * t * f.norm():
                    return SquarefreeResult(alpha, parts, z, res / f.norm())
        if len(live) == 1:
            break
    raise SweepInconsistent(f"squarefree sweep degrees sum to {total}, expected {f.degree}")
