"""Sparse multivariate polynomials over the complex numbers.

Polynomials are stored sparsely (exponent tuple -> coefficient) but every
numerical routine works on dense "boxed" arrays: an ndarray whose axis ``i``
is indexed by the exponent of variable ``i``.  Coefficient vectors are the
boxed array read in descending lexicographic order of exponents, with the
first variable taking priority.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.signal import convolve

Exps = tuple[int, ...]


class DegreeOverflow(ValueError):
    pass


def dim(n: Sequence[int]) -> int:
    """Dimension of the space of polynomials with degree bounded by ``n``."""
    return math.prod(k + 1 for k in n)


def tuple_leq(a: Sequence[int], b: Sequence[int]) -> bool:
    if len(a) != len(b):
        raise ValueError(f"tuple degrees of different lengths: {a} vs {b}")
    return all(x <= y for x, y in zip(a, b))


def tuple_add(a: Sequence[int], b: Sequence[int]) -> Exps:
    return tuple(x + y for x, y in zip(a, b))


def tuple_sub(a: Sequence[int], b: Sequence[int]) -> Exps:
    return tuple(x - y for x, y in zip(a, b))


def tuple_max(*ts: Sequence[int]) -> Exps:
    return tuple(max(c) for c in zip(*ts))


def lex_exponents(n: Sequence[int]) -> list[Exps]:
    """All exponent tuples of the box ``n`` in descending lex order."""
    shape = tuple(k + 1 for k in n)
    return [tuple(k - i for k, i in zip(n, idx)) for idx in np.ndindex(*shape)]


def lex_index(exps: np.ndarray, n: Sequence[int]) -> np.ndarray:
    """Position of exponent rows ``exps`` (shape (N, l)) in the lex order of box ``n``."""
    exps = np.atleast_2d(exps)
    n = np.asarray(n)
    return np.ravel_multi_index(tuple((n - exps).T), tuple(n + 1))


# -- boxed dense arrays ------------------------------------------------------

def pack_dense(a: np.ndarray) -> np.ndarray:
    return np.flip(a).ravel()


def unpack_dense(vec: np.ndarray, n: Sequence[int]) -> np.ndarray:
    return np.flip(np.asarray(vec).reshape(tuple(k + 1 for k in n)))


def pad_dense(a: np.ndarray, n: Sequence[int]) -> np.ndarray:
    shape = tuple(k + 1 for k in n)
    if a.shape == shape:
        return a
    if any(s > t for s, t in zip(a.shape, shape)):
        raise DegreeOverflow(f"box {a.shape} does not fit in {shape}")
    out = np.zeros(shape, dtype=complex)
    out[tuple(slice(0, s) for s in a.shape)] = a
    return out


def dense_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == 1:
        return np.convolve(a, b)
    return convolve(a, b, method="direct")


def dense_pow(a: np.ndarray, k: int) -> np.ndarray:
    """``a**k`` by repeated squaring."""
    result = None
    base = a
    while k:
        if k & 1:
            result = base if result is None else dense_mul(result, base)
        k >>= 1
        if k:
            base = dense_mul(base, base)
    if result is None:
        return np.ones((1,) * a.ndim, dtype=complex)
    return result


def dense_diff(a: np.ndarray, axis: int) -> np.ndarray:
    """Partial derivative of a boxed array; the box shrinks by one along ``axis``."""
    n = a.shape[axis]
    if n == 1:
        return np.zeros(a.shape, dtype=complex)
    k = np.arange(1, n).reshape([-1 if i == axis else 1 for i in range(a.ndim)])
    return np.take(a, np.arange(1, n), axis=axis) * k


def conv_matrix_dense(q: np.ndarray, m_h: Sequence[int]) -> np.ndarray:
    """Matrix of h -> q*h from the lex vectors of box ``m_h`` to box ``deg q + m_h``."""
    n_q = tuple(s - 1 for s in q.shape)
    out = tuple_add(n_q, m_h)
    hs = np.array(lex_exponents(m_h)).reshape(-1, len(m_h))
    C = np.zeros((dim(out), len(hs)), dtype=complex)
    cols = np.arange(len(hs))
    for e_q in zip(*np.nonzero(q)):
        rows = lex_index(hs + np.array(e_q), out)
        C[rows, cols] += q[e_q]
    return C


# -- MultiPoly ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MultiPoly:
    """A polynomial in named variables with complex coefficients.

    Exactly-zero coefficients are dropped on construction.
    """

    vars: tuple[str, ...]
    terms: Mapping[Exps, complex] = field(default_factory=dict)

    def __post_init__(self):
        vs = tuple(self.vars)
        if not vs:
            raise ValueError("a polynomial needs at least one variable")
        clean = {}
        for e, c in self.terms.items():
            e = tuple(int(k) for k in e)
            if len(e) != len(vs) or min(e) < 0:
                raise ValueError(f"bad exponent {e} for variables {vs}")
            c = complex(c)
            if c != 0:
                clean[e] = clean.get(e, 0) + c
        clean = {e: c for e, c in clean.items() if c != 0}
        object.__setattr__(self, "vars", vs)
        object.__setattr__(self, "terms", clean)

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    # construction
    @classmethod
    def constant(cls, c, vars: Sequence[str]) -> MultiPoly:
        return cls(tuple(vars), {(0,) * len(vars): c})

    @classmethod
    def zero(cls, vars: Sequence[str]) -> MultiPoly:
        return cls(tuple(vars), {})

    @classmethod
    def variable(cls, name: str, vars: Sequence[str]) -> MultiPoly:
        vars = tuple(vars)
        e = tuple(int(v == name) for v in vars)
        return cls(vars, {e: 1})

    @classmethod
    def from_dense(cls, vars: Sequence[str], a: np.ndarray) -> MultiPoly:
        a = np.asarray(a)
        nz = np.nonzero(a)
        return cls(tuple(vars), {tuple(int(i) for i in idx): a[idx] for idx in zip(*nz)})

    @classmethod
    def from_roots(cls, roots: Iterable[complex], var: str = "x") -> MultiPoly:
        a = np.ones(1, dtype=complex)
        for r in roots:
            a = np.convolve(a, [-r, 1])
        return cls.from_dense((var,), a)

    # inspection
    @property
    def nvars(self) -> int:
        return len(self.vars)

    @property
    def degree(self) -> Exps:
        if not self.terms:
            return (0,) * self.nvars
        return tuple_max(*self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def coeff(self, e: Sequence[int]) -> complex:
        return self.terms.get(tuple(e), 0j)

    def is_real(self, tol: float = 0.0) -> bool:
        return all(abs(c.imag) <= tol * max(1.0, abs(c)) for c in self.terms.values())

    def dense(self, bound: Sequence[int] | None = None) -> np.ndarray:
        n = self.degree if bound is None else tuple(bound)
        if not tuple_leq(self.degree, n):
            raise DegreeOverflow(f"degree {self.degree} exceeds bound {n}")
        a = np.zeros(tuple(k + 1 for k in n), dtype=complex)
        for e, c in self.terms.items():
            a[e] = c
        return a

    def norm(self) -> float:
        return math.sqrt(sum(abs(c) ** 2 for c in self.terms.values()))

    def variables_used(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.nvars) if any(e[i] for e in self.terms))

    # arithmetic
    def _check(self, other: MultiPoly):
        if self.vars != other.vars:
            raise ValueError(f"variable mismatch: {self.vars} vs {other.vars}")

    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(other, self.vars)
        self._check(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return MultiPoly(self.vars, t)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return MultiPoly(self.vars, {e: other * c for e, c in self.terms.items()})
        self._check(other)
        if self.is_zero() or other.is_zero():
            return MultiPoly.zero(self.vars)
        return MultiPoly.from_dense(self.vars, dense_mul(self.dense(), other.dense()))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1 / complex(c))

    def __pow__(self, k: int):
        return MultiPoly.from_dense(self.vars, dense_pow(self.dense(), k))

    def normalized(self) -> MultiPoly:
        nrm = self.norm()
        return self if nrm == 0 else self / nrm

    def with_vars(self, vars: Sequence[str]) -> MultiPoly:
        """Re-express over a superset of the current variables."""
        vars = tuple(vars)
        pos = [vars.index(v) for v in self.vars]
        t = {}
        for e, c in self.terms.items():
            ne = [0] * len(vars)
            for i, k in zip(pos, e):
                ne[i] = k
            t[tuple(ne)] = c
        return MultiPoly(vars, t)

    def restrict(self, keep: Sequence[int]) -> MultiPoly:
        """Drop variables not in ``keep``; their exponents must all be zero."""
        keep = tuple(keep)
        t = {}
        for e, c in self.terms.items():
            if any(e[i] for i in range(self.nvars) if i not in keep):
                raise ValueError("polynomial depends on a dropped variable")
            t[tuple(e[i] for i in keep)] = c
        return MultiPoly(tuple(self.vars[i] for i in keep), t)

    def substitute(self, values: Mapping[int, complex]) -> MultiPoly:
        """Evaluate the variables at indices ``values``; they keep exponent zero."""
        t: dict[Exps, complex] = {}
        for e, c in self.terms.items():
            w = c
            ne = list(e)
            for i, v in values.items():
                w *= v ** e[i]
                ne[i] = 0
            ne = tuple(ne)
            t[ne] = t.get(ne, 0) + w
        return MultiPoly(self.vars, t)

    def __call__(self, *point) -> complex:
        return sum(c * math.prod(p ** k for p, k in zip(point, e)) for e, c in self.terms.items())

    def __repr__(self):
        from .polystr import format_poly

        return f"MultiPoly({format_poly(self)!r})"


def mul(f: MultiPoly, g: MultiPoly) -> MultiPoly:
    return f * g


def add(f: MultiPoly, g: MultiPoly) -> MultiPoly:
    return f + g


def scale(alpha: complex, f: MultiPoly) -> MultiPoly:
    return f * alpha


def lex_pack(f: MultiPoly, n: Sequence[int]) -> np.ndarray:
    """Dense coefficient vector of ``f`` in the box ``n``, descending lex order."""
    return pack_dense(f.dense(n))


def lex_unpack(vec: np.ndarray, n: Sequence[int], vars: Sequence[str]) -> MultiPoly:
    vec = np.asarray(vec)
    if vec.shape != (dim(n),):
        raise ValueError(f"vector of length {vec.size} does not match box {tuple(n)}")
    return MultiPoly.from_dense(vars, unpack_dense(vec, n))


def poly_norm(f: MultiPoly) -> float:
    return f.norm()


def sin_vectors(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 and nb == 0:
        return 0.0
    if na == 0 or nb == 0:
        return 1.0
    u = a / na
    w = b / nb
    d = np.linalg.norm(u - np.vdot(w, u) * w)
    return float(min(1.0, d))


def sin_distance(p: MultiPoly, q: MultiPoly) -> float:
    """Scaling-invariant distance between the lines spanned by ``p`` and ``q``."""
    p._check(q)
    n = tuple_max(p.degree, q.degree)
    return sin_vectors(lex_pack(p, n), lex_pack(q, n))


def conv_matrix(q: MultiPoly, m_h: Sequence[int]) -> np.ndarray:
    if q.is_zero():
        raise ValueError("convolution matrix of the zero polynomial")
    return conv_matrix_dense(q.dense(), tuple(m_h))


def dir_derivative(f: MultiPoly, z: Sequence[complex]) -> MultiPoly:
    """Directional derivative sum_i z_i df/dx_i, kept in the box of ``f``."""
    if len(z) != f.nvars:
        raise ValueError("direction length must equal the number of variables")
    if f.is_zero():
        return f
    a = f.dense()
    out = np.zeros_like(a)
    for i, zi in enumerate(z):
        if zi != 0:
            d = dense_diff(a, i)
            out[tuple(slice(0, s) for s in d.shape)] += zi * d
    return MultiPoly.from_dense(f.vars, out)


def diff(f: MultiPoly, i: int) -> MultiPoly:
    z = [0] * f.nvars
    z[i] = 1
    return dir_derivative(f, z)


# -- factorizations -----------------------------------------------------------

@dataclass(frozen=True)
class Factorization:
    alpha: complex
    factors: tuple[tuple[MultiPoly, int], ...]

    def __post_init__(self):
        fs = tuple((p, int(k)) for p, k in self.factors)
        for p, k in fs:
            if k < 1:
                raise ValueError("multiplicities must be positive")
            if p.is_constant():
                raise ValueError("factors must be nonconstant")
        object.__setattr__(self, "factors", fs)
        object.__setattr__(self, "alpha", complex(self.alpha))

    @property
    def vars(self) -> tuple[str, ...]:
        return self.factors[0][0].vars if self.factors else ()

    def structure_pairs(self) -> list[tuple[Exps, int]]:
        return [(p.degree, k) for p, k in self.factors]

    def expanded_factors(self) -> list[MultiPoly]:
        return [p for p, k in self.factors for _ in range(k)]

    def degree(self) -> Exps:
        deg = None
        for p, k in self.factors:
            d = tuple(k * e for e in p.degree)
            deg = d if deg is None else tuple_add(deg, d)
        return deg

    def normalized(self) -> Factorization:
        """Unit-norm factors with the scale absorbed into alpha."""
        alpha = self.alpha
        fs = []
        for p, k in self.factors:
            nrm = p.norm()
            alpha *= nrm ** k
            fs.append((p / nrm, k))
        return Factorization(alpha, tuple(fs))


def expand(F: Factorization, vars: Sequence[str] | None = None) -> MultiPoly:
    """alpha * prod f_i**k_i, multiplying unit-norm factors and scaling last."""
    if not F.factors:
        if vars is None:
            raise ValueError("cannot expand an empty factorization without variables")
        return MultiPoly.constant(F.alpha, vars)
    G = F.normalized()
    acc = None
    for p, k in G.factors:
        term = dense_pow(p.dense(), k)
        acc = term if acc is None else dense_mul(acc, term)
    return MultiPoly.from_dense(G.vars, acc * G.alpha)


def fact_distance(F: Factorization, G: Factorization) -> float:
    """Bottleneck sine distance between factor lists, multiplicities expanded."""
    fs = F.expanded_factors()
    gs = G.expanded_factors()
    if len(fs) != len(gs):
        return 1.0
    if not fs:
        return 0.0
    # distinct factors are compared once and broadcast over their copies
    D = np.array([[sin_distance(f, g) for g, _ in G.factors] for f, _ in F.factors])
    rows = np.repeat(np.arange(len(F.factors)), [k for _, k in F.factors])
    cols = np.repeat(np.arange(len(G.factors)), [k for _, k in G.factors])
    cost = D[np.ix_(rows, cols)]
    for t in np.unique(cost):
        feasible = (cost > t).astype(float)
        r, c = linear_sum_assignment(feasible)
        if feasible[r, c].sum() == 0:
            return float(t)
    return 1.0
