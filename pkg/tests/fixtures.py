"""Reference inputs shared by the test modules."""

from fractions import Fraction

import numpy as np

from numfact.polycore import Factorization, MultiPoly
from numfact.polystr import parse_poly

XY = ("x", "y")

# seven-digit data of (x + 2/3)(y + 5/6)(x + 6/7 y)
EQ1 = "x^2*y + 0.857143*x*y^2 + 0.833333*x^2 + 1.38095*x*y + 0.571429*y^2 + 0.555556*x + 0.476190*y"
EQ1_TRUE = ["x + 0.6666666666666666", "y + 0.8333333333333334", "x + 0.8571428571428571*y"]

# the printed alternatives near EQ1 and the printed numerical factorization
TABLE1 = {
    "fhat": ["x + 0.6666667", "y + 0.8333333", "x + 0.8571429*y"],
    "f1": ["y + 0.8333327", "x^2 + 0.6666663*x + 0.5714287*y + 0.8571420*x*y"],
    "f2": ["x + 0.8571425*y", "x*y + 0.8333321*x + 0.6666661*y + 0.5555555"],
    "f3": ["x + 0.66666728", "x*y + 0.83333331*x + 0.7142836*y + 0.8571432*y^2"],
}

RT100_ROOTS = [Fraction(40, 9), Fraction(10, 3), Fraction(20, 9), Fraction(10, 9)]
RT100_MULT = [10, 20, 30, 40]

# the -y^6 term enters once; doubling it makes every listed factorization far away
P1 = (
    "x^7*y + x^5*y^3 + x^6 - x*y^7 - x^3*y^5 - 3*x^2*y^4 + 6*x^2*y^2"
    " + 2*x^3*y^3 - 2*x^2*y^6 + 2*x^6*y^2 - 2*x*y^5 + 2*x^4 - y^6"
    " + 7*x^4*y^2 + 4*x^5*y + 0.999001*x*y^3 + 1.998002001*x*y + 4.999001*x^3*y"
    " + 2.999001*y^2 - 1.000999*x^2"
    " + 0.001*y^3 + 0.001*x^3 + 0.003*x*y^2 + 0.001*x^3*y^2 + 0.003*x^2*y + 0.001*x^4*y"
    " + 0.001*x*y^4 + 0.001*x^2*y^3 + 0.002*y + 0.002*x - 2.001997998999"
)

P_FACTORS = {
    2: [
        "x*y + 1",
        "0.001*x^2*y + 6*x^3*y + 2*x^5*y + 0.001*x*y^2 + 2*x^2*y^2 + 0.001*y^3 - 1.000999*x^2"
        " + 2*x^4 - y^6 + x^6 + x^4*y^2 + 4*x*y - x^2*y^4 + 0.001*x^3 + 2.999001*y^2"
        " - 2*x*y^5 - 2.001997999 + 0.002*y + 0.002*x - 2*x*y^3",
    ],
    3: [
        "-2*x*y^3 + 2*x*y + 2*x^3*y + x^4 + 2*y^2 - y^4 - 1.000999 + 0.001*y + 0.001*x",
        "x^2 + y^2 + 2",
        "x*y + 1",
    ],
    4: [
        "x^3 - x*y^2 + x + x^2*y - y^3 + y + x^2 - y^2 + 1.001",
        "x + y - 1",
        "x^2 + y^2 + 2",
        "x*y + 1",
    ],
    5: ["x + y + 1", "x^2 - y^2 + 1", "x + y - 1", "x^2 + y^2 + 2", "x*y + 1"],
}

LADDER_EPS = [1e-14, 1e-12, 1e-8, 1e-5, 1e-2]
LADDER_FORWARD = [6.96e-16, 8.88e-14, 9.16e-11, 2.06e-7, 5.62e-4]


def eq1() -> MultiPoly:
    return parse_poly(EQ1, XY)


def factors_of(strings, vars=XY) -> Factorization:
    return Factorization(1.0, tuple((parse_poly(s, vars), 1) for s in strings))


def rt100() -> MultiPoly:
    """(x-40/9)^10 (x-10/3)^20 (x-20/9)^30 (x-10/9)^40 expanded exactly, then rounded."""
    c = [Fraction(1)]
    for r, k in zip(RT100_ROOTS, RT100_MULT):
        for _ in range(k):
            nxt = [Fraction(0)] * (len(c) + 1)
            for i, a in enumerate(c):
                nxt[i] += a
                nxt[i + 1] -= a * r
            c = nxt
    asc = np.array([float(a) for a in reversed(c)])
    return MultiPoly.from_dense(("x",), asc)


def p1() -> MultiPoly:
    return parse_poly(P1, XY)


def p_construction(j: int) -> Factorization:
    if j == 1:
        return Factorization(1.0, ((p1(), 1),))
    return factors_of(P_FACTORS[j])


# -- random instances -----------------------------------------------------------

def _separated_points(rng, count, radius=1.0, gap=0.35):
    pts = []
    while len(pts) < count:
        z = radius * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1))
        if all(abs(z - w) >= gap for w in pts):
            pts.append(z)
    return pts


def random_univariate(rng, max_degree=12, real=True) -> Factorization:
    """Product of well separated linear factors with multiplicities, total degree <= max_degree."""
    count = int(rng.integers(1, 5))
    mults = []
    budget = max_degree
    for _ in range(count):
        if budget < 1:
            break
        k = int(rng.integers(1, min(4, budget) + 1))
        mults.append(k)
        budget -= k
    if real:
        roots = [-1.5 + 0.75 * i + 0.1 * rng.random() for i in range(len(mults))]
    else:
        roots = _separated_points(rng, len(mults))
    factors = tuple((MultiPoly.from_dense(("x",), np.array([-r, 1.0])), k) for r, k in zip(roots, mults))
    return Factorization(1.0, factors)


_IRREDUCIBLE_SHAPES = [(1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (2, 2)]


def random_irreducible(rng, d) -> MultiPoly:
    """Random integer bivariate polynomial of degree exactly ``d``; generic ones are irreducible."""
    while True:
        a = rng.integers(-3, 4, size=(d[0] + 1, d[1] + 1)).astype(float)
        a[d[0], :] += rng.integers(1, 3) * (a[d[0], :] == 0)
        a[:, d[1]] += rng.integers(1, 3) * (a[:, d[1]] == 0)
        a[0, 0] = a[0, 0] or 1.0
        p = MultiPoly.from_dense(XY, a)
        if p.degree == tuple(d) and _irreducible_over_q(a):
            return p


def _irreducible_over_q(a) -> bool:
    import sympy

    x, y = sympy.symbols("x y")
    expr = sum(int(a[i, j]) * x**i * y**j for i in range(a.shape[0]) for j in range(a.shape[1]))
    _, facs = sympy.factor_list(expr)
    return len(facs) == 1 and facs[0][1] == 1


def random_bivariate(rng, max_factors=3) -> Factorization:
    """Product of at most three random irreducibles of degree <= (2,2), total degree <= (4,4)."""
    count = int(rng.integers(2, max_factors + 1))
    factors = []
    total = [0, 0]
    tries = 0
    while len(factors) < count and tries < 50:
        tries += 1
        d = _IRREDUCIBLE_SHAPES[int(rng.integers(len(_IRREDUCIBLE_SHAPES)))]
        if total[0] + d[0] > 4 or total[1] + d[1] > 4:
            continue
        if any(p.degree == d and d in ((1, 0), (0, 1)) for p, _ in factors):
            continue
        factors.append((random_irreducible(rng, d), 1))
        total = [total[0] + d[0], total[1] + d[1]]
    return Factorization(1.0, tuple(factors))


def perturb(f: MultiPoly, delta: float, rng) -> MultiPoly:
    """f plus a random perturbation of norm exactly delta * ||f|| on the support box of f."""
    a = f.dense()
    e = rng.standard_normal(a.shape)
    e *= delta * f.norm() / np.linalg.norm(e)
    return MultiPoly.from_dense(f.vars, a + e)


def random_profile(rng) -> Factorization:
    """Exact product with a known multiplicity profile; odd seeds give two variables."""
    if rng.random() < 0.5:
        F = random_univariate(rng, max_degree=10)
    else:
        base = random_bivariate(rng, max_factors=2)
        ks = [int(rng.integers(1, 4)) for _ in base.factors]
        F = Factorization(1.0, tuple((p, k) for (p, _), k in zip(base.factors, ks)))
    return F


def profile_parts(F: Factorization) -> dict[int, MultiPoly]:
    parts: dict[int, MultiPoly] = {}
    for p, k in F.factors:
        parts[k] = p if k not in parts else parts[k] * p
    return parts
