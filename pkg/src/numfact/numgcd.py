"""Numerical GCD of two polynomials within a relative residual tolerance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import RankDecision
from .polycore import (
    MultiPoly,
    conv_matrix_dense,
    dense_mul,
    dim,
    pack_dense,
    tuple_sub,
    unpack_dense,
)
from .refine import gauss_newton_solve

# a Sylvester singular value this far above the residual tolerance is not worth refining
CANDIDATE_SLACK = 1e2


@dataclass
class GcdResult:
    gcd: MultiPoly
    cofactor_p: MultiPoly
    cofactor_q: MultiPoly
    residual: float
    rank_record: RankDecision | None = None


def _sylvester(pa: np.ndarray, qa: np.ndarray, d):
    """Matrix of (a, b) -> q*a - p*b for cofactor boxes deg p - d and deg q - d."""
    n_p = tuple(s - 1 for s in pa.shape)
    n_q = tuple(s - 1 for s in qa.shape)
    ka = tuple_sub(n_p, d)
    kb = tuple_sub(n_q, d)
    return np.hstack([conv_matrix_dense(qa, ka), -conv_matrix_dense(pa, kb)]), ka, kb


def _refine_gcd(pa, qa, d, ka, kb, a0, b0, max_iter=50):
    """Fit g from the cofactors, then Gauss-Newton on (g*a - p, g*b - q, c.g - 1)."""
    pv, qv = pack_dense(pa), pack_dense(qa)
    A = np.vstack([conv_matrix_dense(unpack_dense(a0, ka), d), conv_matrix_dense(unpack_dense(b0, kb), d)])
    g0 = kernels.lstsq_min_norm(A, np.concatenate([pv, qv]))
    ng = np.linalg.norm(g0)
    if ng == 0:
        return None
    c = g0 / ng
    s = np.vdot(c, g0)
    g0, a0, b0 = g0 / s, a0 * s, b0 * s
    na, nb, ngd = a0.size, b0.size, g0.size

    def fun(z):
        g, a, b = z[:ngd], z[ngd : ngd + na], z[ngd + na :]
        G = unpack_dense(g, d)
        Aa = unpack_dense(a, ka)
        Bb = unpack_dense(b, kb)
        r = np.concatenate(
            [pack_dense(dense_mul(G, Aa)) - pv, pack_dense(dense_mul(G, Bb)) - qv, [np.vdot(c, g) - 1]]
        )
        m1, m2 = pv.size, qv.size
        J = np.zeros((m1 + m2 + 1, ngd + na + nb), dtype=complex)
        J[:m1, :ngd] = conv_matrix_dense(Aa, d)
        J[:m1, ngd : ngd + na] = conv_matrix_dense(G, ka)
        J[m1 : m1 + m2, :ngd] = conv_matrix_dense(Bb, d)
        J[m1 : m1 + m2, ngd + na :] = conv_matrix_dense(G, kb)
        J[-1, :ngd] = c.conj()
        return r, J

    z0 = np.concatenate([g0, a0, b0])
    st = gauss_newton_solve(fun, z0, max_iter=max_iter, stagnation=0.5, floor=1e-15)
    z = st.z
    g, a, b = z[:ngd], z[ngd : ngd + na], z[ngd + na :]
    G, Aa, Bb = unpack_dense(g, d), unpack_dense(a, ka), unpack_dense(b, kb)
    res = max(
        np.linalg.norm(pack_dense(dense_mul(G, Aa)) - pv),
        np.linalg.norm(pack_dense(dense_mul(G, Bb)) - qv),
    )
    return G, Aa, Bb, float(res)


def _try_degree(pa, qa, d, tol, force=False):
    S, ka, kb = _sylvester(pa, qa, d)
    _, s, Vh = np.linalg.svd(S, full_matrices=False) if S.shape[0] >= S.shape[1] else np.linalg.svd(S)
    sv = np.zeros(S.shape[1])
    sv[: s.size] = s
    smin = sv[-1]
    rec = RankDecision(int(np.sum(sv > tol * sv[0])), sv, float(sv[-2] / smin) if smin > 0 and sv.size > 1 else np.inf, tol)
    if not force and smin > CANDIDATE_SLACK * tol * max(sv[0], 1e-300):
        return None, rec
    v = Vh[-1].conj()
    na = dim(ka)
    a0, b0 = v[:na], v[na:]
    out = _refine_gcd(pa, qa, d, ka, kb, a0, b0)
    if out is None:
        return None, rec
    G, Aa, Bb, res = out
    if res > tol:
        return None, rec
    return (G, Aa, Bb, res), rec


def _normalize(a):
    n = np.linalg.norm(a)
    return a / n, n


def _univariate_gcd_degree(pa, qa, tol):
    """Degree sweep: the largest gcd degree whose refined residual is within ``tol``."""
    pa, _ = _normalize(pa)
    qa, _ = _normalize(qa)
    n, m = pa.size - 1, qa.size - 1
    for d in range(min(n, m), 0, -1):
        out, rec = _try_degree(pa, qa, (d,), tol)
        if out is not None:
            return d, out, rec
    return 0, None, None


def _coprime(p: MultiPoly, q: MultiPoly) -> GcdResult:
    one = MultiPoly.constant(1, p.vars)
    return GcdResult(one, p, q, 0.0, None)


def numerical_gcd(p: MultiPoly, q: MultiPoly, tol: float, seed: int = 0) -> GcdResult:
    """GCD of ``p`` and ``q`` of maximal degree with relative residual at most ``tol``.

    The gcd is returned with unit norm; cofactors carry the scale of the inputs.
    """
    if p.is_zero() or q.is_zero():
        raise ValueError("numerical_gcd needs nonzero polynomials")
    if tol <= 0:
        raise ValueError("tol must be positive")
    p._check(q)
    if p.is_constant() or q.is_constant():
        return _coprime(p, q)
    pa, pn = _normalize(p.dense())
    qa, qn = _normalize(q.dense())
    vars_p = p.variables_used()
    vars_q = q.variables_used()
    used = sorted(set(vars_p) | set(vars_q))
    if len(used) == 1:
        # compress to a 1-D problem along the single live variable
        ax = used[0]
        pa1 = pa.reshape(-1) if pa.ndim == 1 else np.moveaxis(pa, ax, 0).reshape(pa.shape[ax], -1)[:, 0]
        qa1 = qa.reshape(-1) if qa.ndim == 1 else np.moveaxis(qa, ax, 0).reshape(qa.shape[ax], -1)[:, 0]
        d, out, rec = _univariate_gcd_degree(pa1, qa1, tol)
        if out is None:
            return _coprime(p, q)
        G, Aa, Bb, res = out
        shape = [1] * p.nvars

        def lift(a):
            s = list(shape)
            s[ax] = a.size
            return a.reshape(s)

        G, Aa, Bb = lift(G), lift(Aa), lift(Bb)
    else:
        found = _multivariate_gcd(pa, qa, tol, seed)
        if found is None:
            return _coprime(p, q)
        G, Aa, Bb, res, rec = found
    gn = np.linalg.norm(G)
    G = G / gn
    return GcdResult(
        MultiPoly.from_dense(p.vars, G),
        MultiPoly.from_dense(p.vars, Aa * gn * pn),
        MultiPoly.from_dense(p.vars, Bb * gn * qn),
        res,
        rec,
    )


def _project(a: np.ndarray, keep: int, point: np.ndarray) -> np.ndarray:
    """Univariate coefficients (ascending) along axis ``keep`` with other variables fixed."""
    out = a
    for ax in range(a.ndim - 1, -1, -1):
        if ax == keep:
            continue
        powers = point[ax] ** np.arange(out.shape[ax])
        out = np.tensordot(out, powers, axes=([ax], [0]))
    return np.trim_zeros(out, "b") if np.any(out) else out[:1]


def _multivariate_gcd(pa, qa, tol, seed, attempts=3):
    ell = pa.ndim
    n_p = tuple(s - 1 for s in pa.shape)
    n_q = tuple(s - 1 for s in qa.shape)
    for attempt in range(attempts):
        rng = np.random.default_rng([seed, attempt, 7919])
        point = np.exp(2j * np.pi * rng.random(ell)) * (0.5 + rng.random(ell))
        d = []
        for j in range(ell):
            pu = _project(pa, j, point)
            qu = _project(qa, j, point)
            if pu.size < 2 or qu.size < 2:
                d.append(0)
                continue
            dj, _, _ = _univariate_gcd_degree(pu, qu, tol)
            d.append(min(dj, n_p[j], n_q[j]))
        d = tuple(d)
        if not any(d):
            return None
        out, rec = _try_degree(pa, qa, d, tol, force=True)
        if out is not None:
            G, Aa, Bb, res = out
            return G, Aa, Bb, res, rec
    return None
