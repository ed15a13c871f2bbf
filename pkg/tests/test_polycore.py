import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from numfact.polycore import (
    Factorization,
    MultiPoly,
    conv_matrix,
    dim,
    dir_derivative,
    expand,
    fact_distance,
    lex_exponents,
    lex_pack,
    lex_unpack,
    poly_norm,
    sin_distance,
)
from numfact.polystr import parse_poly

from fixtures import EQ1, TABLE1, XY, eq1, factors_of


def P(s, vars=XY):
    return parse_poly(s, vars)


def test_dim_and_lex_order():
    assert dim((2, 1)) == 6
    assert lex_exponents((1, 1)) == [(1, 1), (1, 0), (0, 1), (0, 0)]


def test_lex_pack_worked_example():
    f = P("3*x^2*y - 4*x*y + 5*x + 6")
    assert np.allclose(lex_pack(f, (2, 1)), [3, 0, -4, 5, 0, 6])


def test_lex_pack_zero_and_single_monomial():
    assert np.allclose(lex_pack(MultiPoly.zero(XY), (1, 1)), 0)
    assert np.allclose(lex_pack(P("y"), (1, 1)), [0, 0, 1, 0])


def test_pack_unpack_round_trip():
    rng = np.random.default_rng(1)
    v = rng.standard_normal(dim((2, 3))) + 1j * rng.standard_normal(dim((2, 3)))
    assert np.allclose(lex_pack(lex_unpack(v, (2, 3), XY), (2, 3)), v)


def test_lex_pack_rejects_small_box():
    with pytest.raises(ValueError):
        lex_pack(P("x^2"), (1, 1))


def test_norm():
    assert poly_norm(P("3*x + 4", ("x",))) == pytest.approx(5)
    assert poly_norm(MultiPoly.zero(XY)) == 0


def test_sin_distance_examples():
    assert sin_distance(MultiPoly.zero(XY), MultiPoly.zero(XY)) == 0
    assert sin_distance(P("3*x + 4*y"), P("4*x + 3*y")) == pytest.approx(0.28)
    p = P("x^2 - 3*x*y + 2")
    assert sin_distance(p, (2 - 1j) * p) < 1e-15


def test_fact_distance_examples():
    x = ("x",)
    F = Factorization(1.0, ((P("x + 1", x), 1), (P("x + 2", x), 1)))
    G = Factorization(1.0, ((P("x + 2.001", x), 1), (P("x + 1", x), 1)))
    assert fact_distance(F, G) == pytest.approx(sin_distance(P("x + 2", x), P("x + 2.001", x)))
    # |det((1,2),(1,2.001))| / (|(1,2)| |(1,2.001)|)
    assert fact_distance(F, G) == pytest.approx(0.001 / (np.sqrt(5) * np.sqrt(5.004001)), rel=1e-9)
    H = Factorization(2.0, ((P("x"), 1), (P("y"), 1)))
    K = Factorization(2.0, ((P("y"), 1), (P("x"), 1)))
    assert fact_distance(H, K) == 0
    three = Factorization(1.0, ((P("x + 1", x), 3),))
    assert fact_distance(F, three) == 1


def test_conv_matrix_examples():
    assert np.allclose(conv_matrix(MultiPoly.constant(1, XY), (1, 2)), np.eye(dim((1, 2))))
    C = conv_matrix(P("x + 1", ("x",)), (1,))
    assert np.allclose(C, [[1, 0], [1, 1], [0, 1]])


def test_conv_matrix_matches_product():
    rng = np.random.default_rng(3)
    q = lex_unpack(rng.standard_normal(dim((1, 2))), (1, 2), XY)
    h = lex_unpack(rng.standard_normal(dim((2, 1))), (2, 1), XY)
    assert np.allclose(conv_matrix(q, (2, 1)) @ lex_pack(h, (2, 1)), lex_pack(q * h, (3, 3)))


def test_dir_derivative_examples():
    assert dir_derivative(MultiPoly.constant(3, XY), [0.6, 0.8]).is_zero()
    assert dir_derivative(P("x^2", ("x",)), [1]) == P("2*x", ("x",))
    a, b = 0.6, 0.8j
    assert dir_derivative(P("x*y"), [a, b]) == a * P("y") + b * P("x")


def test_arithmetic_and_expand():
    x = ("x",)
    assert P("x + 1", x) * P("x - 1", x) == P("x^2 - 1", x)
    F = Factorization(1.0, ((P("x + 0.6666666666666666", x), 1),))
    assert sin_distance(expand(F), P("x + 0.6666666666666666", x)) < 1e-15


def test_expand_of_printed_factorization_is_near_data():
    F = factors_of(TABLE1["fhat"])
    g = expand(F)
    f = eq1()
    gamma = np.vdot(lex_pack(g, (2, 2)), lex_pack(f, (2, 2))) / np.vdot(lex_pack(g, (2, 2)), lex_pack(g, (2, 2)))
    assert np.linalg.norm(lex_pack(f, (2, 2)) - gamma * lex_pack(g, (2, 2))) == pytest.approx(2.11e-6, rel=0.02)


def test_factorization_rejects_constant_factor():
    with pytest.raises(ValueError):
        Factorization(1.0, ((MultiPoly.constant(2, XY), 1),))


# -- properties -------------------------------------------------------------------

coef = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@st.composite
def polys(draw, box=(2, 2)):
    v = np.array(draw(st.lists(coef, min_size=dim(box), max_size=dim(box))), dtype=complex)
    return lex_unpack(v, box, XY)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_sin_distance_is_a_metric(p, q, r):
    d = sin_distance
    assert 0 <= d(p, q) <= 1 + 1e-12
    assert d(p, q) == pytest.approx(d(q, p), abs=1e-12)
    assert d(p, r) <= d(p, q) + d(q, r) + 1e-9


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), coef.filter(lambda c: abs(c) > 1e-3))
def test_sin_distance_scaling_invariance(p, q, a):
    assert sin_distance(p, a * q) == pytest.approx(sin_distance(p, q), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(polys(), coef)
def test_norm_homogeneity(p, a):
    assert poly_norm(a * p) == pytest.approx(abs(a) * poly_norm(p), rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(polys((1, 1)), polys((2, 1)), polys((2, 1)), coef, coef)
def test_conv_matrix_linearity(q, h1, h2, a, b):
    if q.is_zero():
        q = MultiPoly.constant(1, XY)
    C = conv_matrix(q, (2, 1))
    lhs = C @ (a * lex_pack(h1, (2, 1)) + b * lex_pack(h2, (2, 1)))
    rhs = lex_pack(q * (a * h1 + b * h2), (q.degree[0] + 2, q.degree[1] + 1))
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.linalg.norm(rhs)))


def test_fact_distance_bounded_by_coefficient_gap():
    # both factor lists have norms >= 1, so the distance is at most the worst coefficient change
    rng = np.random.default_rng(5)
    for _ in range(20):
        ps = [lex_unpack(rng.standard_normal(2) + 2, (1, 0), XY) for _ in range(2)]
        qs = [p + lex_unpack(1e-3 * rng.standard_normal(2), (1, 0), XY) for p in ps]
        F = Factorization(1.0, tuple((p, 1) for p in ps))
        G = Factorization(1.0, tuple((q, 1) for q in qs))
        assert fact_distance(F, G) <= max((p - q).norm() for p, q in zip(ps, qs)) + 1e-15


def test_fact_distance_zero_on_permuted_rescaled():
    F = factors_of(["x + 2", "y - 1", "x*y + 3"])
    G = Factorization(5.0, ((P("3*x*y + 9"), 1), (P("2*x + 4"), 1), (P("-y + 1"), 1)))
    assert fact_distance(F, G) < 1e-12
