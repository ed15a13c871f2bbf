"""Stage one: identify a factorization structure and initial factors.

Squarefree parts are split into irreducibles either by univariate root finding
or, for bivariate parts, from the nullspace of the Ruppert matrix: each null
vector ``(g, h)`` satisfies ``d/dy (g/f) = d/dx (h/f)``, the nullity counts the
irreducible factors, and the factors are recovered as ``gcd(f, g - lambda f_x)``
for the eigenvalues ``lambda`` of multiplication by ``g`` modulo ``f``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from . import kernels
from .kernels import RankDecision
from .numgcd import numerical_gcd
from .polycore import (
    Factorization,
    MultiPoly,
    conv_matrix_dense,
    dense_diff,
    dense_mul,
    dim,
    expand,
    lex_exponents,
    lex_pack,
    pack_dense,
    unpack_dense,
)
from .squarefree import SweepInconsistent, squarefree_factor, sweep_tolerances
from .structure import FactorStructure

log = logging.getLogger(__name__)


class SplitError(RuntimeError):
    pass


class ClusterCollision(SplitError):
    pass


class UnsupportedArity(SplitError):
    pass


@dataclass
class SplitResult:
    factors: list[MultiPoly]
    nullity: int
    diagnostics: RankDecision | None
    residual: float = 0.0


def _product_residual(h: MultiPoly, factors) -> float:
    g = expand(Factorization(1.0, tuple((p, 1) for p in factors)))
    n = h.degree
    if g.degree != n:
        return 1.0
    gv, hv = lex_pack(g, n), lex_pack(h, n)
    a = np.vdot(gv, hv) / np.vdot(gv, gv)
    return float(np.linalg.norm(hv - a * gv) / np.linalg.norm(hv))


def _linear_factor(vars, axis: int, root: complex) -> MultiPoly:
    e1 = [0] * len(vars)
    e1[axis] = 1
    p = MultiPoly(tuple(vars), {tuple(e1): 1, (0,) * len(vars): -root})
    return p.normalized()


def univariate_split(h: MultiPoly, tol: float, cluster_tol: float | None = None) -> SplitResult:
    """Linear factors of a squarefree polynomial in a single variable."""
    live = h.variables_used()
    if len(live) != 1:
        raise SplitError(f"univariate_split needs one live variable, got {len(live)}")
    ax = live[0]
    coeffs = np.array([h.coeff(tuple(k if i == ax else 0 for i in range(h.nvars))) for k in range(h.degree[ax] + 1)])
    roots = kernels.companion_roots(coeffs)
    cluster_tol = 1e3 * tol if cluster_tol is None else cluster_tol
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) <= cluster_tol * max(1.0, abs(roots[i])):
                raise ClusterCollision(f"roots {roots[i]:.6g} and {roots[j]:.6g} collide")
    factors = [_linear_factor(h.vars, ax, r) for r in roots]
    return SplitResult(factors, len(factors), None, _product_residual(h, factors))


# -- Ruppert ----------------------------------------------------------------------

def _diff_matrix(box, axis):
    """Lex-coordinate matrix of d/dx_axis from ``box`` to ``box - e_axis``."""
    out = list(box)
    out[axis] -= 1
    D = np.zeros((dim(out), dim(box)))
    for col, e in enumerate(lex_exponents(box)):
        if e[axis] == 0:
            continue
        t = list(e)
        t[axis] -= 1
        row = np.ravel_multi_index(tuple(o - k for o, k in zip(out, t)), tuple(o + 1 for o in out))
        D[row, col] = e[axis]
    return D


def ruppert_matrix_dense(fa: np.ndarray) -> np.ndarray:
    m, n = fa.shape[0] - 1, fa.shape[1] - 1
    if m < 1 or n < 1:
        raise SplitError(f"Ruppert matrix needs degree >= (1,1), got {(m, n)}")
    fx = dense_diff(fa, 0)[: m, :]
    fy = dense_diff(fa, 1)[:, : n]
    gbox, hbox = (m - 1, n), (m, n - 1)
    inner = (m - 1, n - 1)
    Cf = conv_matrix_dense(fa, inner)
    g_block = Cf @ _diff_matrix(gbox, 1) - conv_matrix_dense(fy, gbox)
    h_block = -Cf @ _diff_matrix(hbox, 0) + conv_matrix_dense(fx, hbox)
    return np.hstack([g_block, h_block])


def ruppert_matrix(f: MultiPoly) -> np.ndarray:
    """Matrix of (g, h) -> f (g_y - h_x) - (g f_y - h f_x) on P^(m-1,n) x P^(m,n-1)."""
    if f.nvars != 2:
        raise SplitError("ruppert_matrix expects a polynomial in exactly two variables")
    return ruppert_matrix_dense(f.dense())


def _solve_mult(fa, fx, G, c, m, n, r):
    """Matrix M with g*G_k = sum_j M_jk G_j f_x  (mod f) for g = sum c_k G_k."""
    g = sum(ci * Gi for ci, Gi in zip(c, G))
    cols = [pack_dense(dense_mul(Gj, fx)) for Gj in G]
    A = np.array(cols).T
    if m >= 2:
        A = np.hstack([A, conv_matrix_dense(fa, (m - 2, n))])
    M = np.zeros((r, r), dtype=complex)
    for k in range(r):
        rhs = pack_dense(dense_mul(g, G[k]))
        sol = kernels.lstsq_min_norm(A, rhs)
        M[:, k] = sol[:r]
    return g, M


def _recover(f2: MultiPoly, fa, fx, g, lam, tol, seed) -> list[MultiPoly]:
    """gcd(f, g - lam_i f_x) for every eigenvalue at one common tolerance, loosened until
    the factor degrees add up; a per-factor ladder can stop early on a spurious gcd."""
    fxp = MultiPoly.from_dense(f2.vars, fx)
    gp = MultiPoly.from_dense(f2.vars, g)
    targets = [gp - l * fxp for l in lam]
    for t in sweep_tolerances(tol, loosest=max(1e-3, 10 * tol), step=10.0):
        factors = []
        for i, target in enumerate(targets):
            h = numerical_gcd(f2, target, t, seed + i).gcd
            if h.is_constant():
                break
            factors.append(h)
        else:
            total = tuple(sum(p.degree[v] for p in factors) for v in range(2))
            if total == f2.degree:
                return factors
    return []


def ruppert_split(f: MultiPoly, tol: float, seed: int = 0, rank_tol: float | None = None, retries: int = 3) -> SplitResult:
    """Irreducible factors of a squarefree polynomial in two variables."""
    live = f.variables_used()
    if len(live) != 2:
        raise SplitError("ruppert_split needs exactly two live variables")
    f2 = f.restrict(live)
    rank_tol = tol if rank_tol is None else rank_tol
    out: list[MultiPoly] = []

    # factors free of x have zero x-derivative and hide from the recovery step
    fx_poly = MultiPoly.from_dense(f2.vars, dense_diff(f2.dense(), 0))
    content = None
    if not fx_poly.is_zero():
        for t in sweep_tolerances(tol, loosest=max(tol, 1e-8)):
            c = numerical_gcd(f2, fx_poly, t, seed)
            if not c.gcd.is_constant():
                content = c
                break
    if content is not None:
        rest = content.cofactor_p
        out.extend(univariate_split(content.gcd, tol).factors)
        f2 = rest
    if f2.is_constant():
        return _finish(f, live, out, 0, None)
    if len(f2.variables_used()) < 2:
        out.extend(univariate_split(f2, tol).factors)
        return _finish(f, live, out, len(out), None)

    fa = f2.dense()
    fa = fa / np.linalg.norm(fa)
    R = ruppert_matrix_dense(fa)
    basis, dec = kernels.nullspace(R, rank_tol)
    r = basis.shape[1]
    log.debug("Ruppert nullity %d (tol %.3g, gap %.3g)", r, rank_tol, dec.gap_ratio)
    if r <= 1:
        return _finish(f, live, out + [f2.normalized()], r + len(out), dec)
    m, n = fa.shape[0] - 1, fa.shape[1] - 1
    ng = dim((m - 1, n))
    G = [unpack_dense(basis[:ng, k], (m - 1, n)) for k in range(r)]
    fx = dense_diff(fa, 0)[:m, :]
    for attempt in range(retries + 1):
        rng = np.random.default_rng([seed, attempt, 31])
        c = rng.standard_normal(r) + 1j * rng.standard_normal(r)
        g, M = _solve_mult(fa, fx, G, c, m, n, r)
        lam = kernels.eig_dense(M)
        factors = _recover(f2, fa, fx, g, lam, tol, seed + 1000 * attempt)
        if factors:
            total = tuple(sum(p.degree[i] for p in factors) for i in range(2))
            if total == f2.degree:
                return _finish(f, live, out + factors, r + len(out), dec)
        log.debug("Ruppert factor recovery attempt %d failed", attempt)
    raise SplitError(f"factor recovery failed after {retries + 1} attempts (nullity {r})")


def _finish(f: MultiPoly, live, factors2, nullity, dec) -> SplitResult:
    factors = [p.with_vars(f.vars) if p.vars != f.vars else p for p in factors2]
    return SplitResult(factors, nullity, dec, _product_residual(f, factors))


# -- structure identification -------------------------------------------------

def _structure_of(F: Factorization) -> FactorStructure:
    return FactorStructure(tuple((p.degree, k) for p, k in F.factors))


def _lift(p: MultiPoly, vars) -> MultiPoly:
    return p if p.vars == tuple(vars) else p.with_vars(vars)


def identify_structure(
    f: MultiPoly,
    epsilon: float,
    seed: int = 0,
    hint: FactorStructure | None = None,
    gcd_tol: float | None = None,
    rank_tol: float | None = None,
    retries: int = 3,
) -> tuple[FactorStructure, Factorization]:
    """Squarefree sweep, then split each part; returns the structure and initial factors."""
    if f.is_constant():
        raise SplitError("cannot factor a constant")
    nrm = f.norm()
    gcd_tol = 0.1 * epsilon / nrm if gcd_tol is None else gcd_tol
    rank_tol = epsilon / nrm if rank_tol is None else rank_tol
    if hint is not None:
        F = hinted_initial(f, hint, seed)
        return _structure_of(F), F
    live = f.variables_used()
    if len(live) > 2:
        raise UnsupportedArity(f"{len(live)} variables need a structure hint")
    last = None
    # the gcd residual of noisy data sits right at the noise level, so climb in decades
    # up to the backward tolerance itself (or 1e-3 for the cofactor accuracy of high degrees)
    for t in sweep_tolerances(min(gcd_tol, 1e-3), loosest=max(1e-3, 10 * gcd_tol), step=10.0):
        try:
            sq = squarefree_factor(f, t, seed)
            factors = []
            for h, k in sq.parts:
                hl = h.variables_used()
                if len(hl) == 1:
                    sp = univariate_split(h, t, cluster_tol=1e3 * min(t, gcd_tol))
                else:
                    sp = ruppert_split(h, t, seed, rank_tol=rank_tol)
                factors.extend((p, k) for p in sp.factors)
            F0 = Factorization(1.0, tuple(factors))
            g = expand(F0)
            gv, fv = lex_pack(g, f.degree), lex_pack(f, f.degree)
            alpha = np.vdot(gv, fv) / np.vdot(gv, gv)
            F = Factorization(alpha, tuple((_lift(p, f.vars), k) for p, k in factors))
            return _structure_of(F), F
        except (ClusterCollision, SplitError, SweepInconsistent) as exc:
            log.debug("identification at gcd tolerance %.3g failed: %s", t, exc)
            last = exc
    raise SplitError(f"structure detection failed: {last}")


def univariate_roots(f: MultiPoly) -> tuple[int, np.ndarray]:
    """Live axis and companion-matrix roots of a polynomial in one live variable."""
    live = f.variables_used()
    if len(live) != 1:
        raise SplitError(f"expected one live variable, got {len(live)}")
    ax = live[0]
    coeffs = np.array([f.coeff(tuple(k if i == ax else 0 for i in range(f.nvars))) for k in range(f.degree[ax] + 1)])
    return ax, kernels.companion_roots(coeffs)


def root_cluster_initial(f: MultiPoly) -> Factorization:
    """Group the roots of a one-variable f into clusters at the widest relative gap.

    A root of multiplicity k under relative noise eta spreads over a radius near eta**(1/k),
    which can defeat the gcd sweep long before the clusters touch each other.
    """
    ax, roots = univariate_roots(f)
    if roots.size == 1:
        labels = np.ones(1, dtype=int)
    else:
        pts = np.column_stack([roots.real, roots.imag])
        Z = linkage(pts, method="single")
        scale = max(1.0, float(np.abs(roots).max()))
        heights = np.concatenate([[np.finfo(float).eps * scale], Z[:, 2]])
        gaps = np.log(heights[1:] + 1e-300) - np.log(heights[:-1] + 1e-300)
        cut = int(np.argmax(gaps))
        labels = fcluster(Z, t=np.sqrt(heights[cut] * heights[cut + 1]), criterion="distance")
    factors = []
    for lab in np.unique(labels):
        members = roots[labels == lab]
        factors.append((_linear_factor(f.vars, ax, complex(members.mean())), int(members.size)))
    F0 = Factorization(1.0, tuple(factors))
    g = expand(F0)
    gv, fv = lex_pack(g, f.degree), lex_pack(f, f.degree)
    return Factorization(np.vdot(gv, fv) / np.vdot(gv, gv), F0.factors)


def hinted_initial(f: MultiPoly, hint: FactorStructure, seed: int = 0, starts: int = 8, sweeps: int = 60) -> Factorization:
    """Initial factors at hinted degrees by alternating least squares from random starts."""
    if hint.total_degree() != f.degree:
        raise SplitError(f"hint degree {hint.total_degree()} does not match {f.degree}")
    fa = f.dense()
    fv = pack_dense(fa)
    best = None
    for s in range(starts):
        rng = np.random.default_rng([seed, s, 17])
        ps = []
        for d, _ in hint.components:
            v = rng.standard_normal(dim(d)) + 1j * rng.standard_normal(dim(d))
            ps.append(unpack_dense(v / np.linalg.norm(v), d))
        for _ in range(sweeps):
            for i, (d, k) in enumerate(hint.components):
                rest = np.ones((1,) * f.nvars, dtype=complex)
                for j, (dj, kj) in enumerate(hint.components):
                    e = kj - 1 if j == i else kj
                    for _ in range(e):
                        rest = dense_mul(rest, ps[j])
                C = conv_matrix_dense(rest, d)
                v = kernels.lstsq_min_norm(C, fv)
                nv = np.linalg.norm(v)
                if nv == 0:
                    break
                ps[i] = unpack_dense(v / nv, d)
        F = Factorization(1.0, tuple((MultiPoly.from_dense(f.vars, p), k) for p, (_, k) in zip(ps, hint.components)))
        g = expand(F)
        gv = lex_pack(g, f.degree)
        alpha = np.vdot(gv, fv) / np.vdot(gv, gv)
        res = np.linalg.norm(fv - alpha * gv)
        if best is None or res < best[0]:
            best = (res, Factorization(alpha, F.factors))
    return best[1]
