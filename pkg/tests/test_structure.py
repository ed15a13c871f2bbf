import itertools
import json
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from numfact.structure import (
    ENUMERATION_GUARD,
    FactorStructure,
    StructureError,
    codim,
    combine_degrees,
    dag_to_dot,
    dag_to_json,
    embedding_moves,
    enumerate_structures,
    is_trivial,
    parse_structure,
    precedes,
    select_max_codim,
    split_multiplicity,
    stratification_dag,
)

GOLDEN = Path(__file__).parent / "golden" / "dag_3_2.json"


def S(*comps):
    return FactorStructure(tuple(comps))


def test_codim_examples():
    assert codim(S(((1, 0), 1), ((0, 1), 1), ((1, 1), 1))) == 3
    assert codim(S(((2, 3), 1))) == 0
    assert codim(S(((1, 0), 3), ((0, 1), 2))) == 9


def test_is_trivial():
    assert is_trivial(S(((2, 1), 1)))
    assert is_trivial(S(((1,), 1), ((1,), 1), ((1,), 1)))
    assert not is_trivial(S(((1, 0), 1), ((1, 1), 1)))


def test_equality_ignores_order_and_string_form():
    assert S(((1, 0), 1), ((0, 1), 2)) == S(((0, 1), 2), ((1, 0), 1))
    assert str(S(((1,), 10), ((1,), 20))) == "1^20 1^10"
    assert parse_structure("(1,0) (0,1) (1,1)") == S(((1, 0), 1), ((0, 1), 1), ((1, 1), 1))
    assert FactorStructure.from_json(S(((1, 1), 2)).to_json()) == S(((1, 1), 2))


def _index(T, comp):
    return T.components.index(comp)


def test_worked_lattice_example():
    start = S(((4, 3), 5), ((1, 6), 2), ((3, 2), 1))
    a = split_multiplicity(start, _index(start, ((4, 3), 5)), 3)
    assert a == S(((4, 3), 3), ((4, 3), 2), ((1, 6), 2), ((3, 2), 1))
    b = combine_degrees(a, _index(a, ((4, 3), 2)), _index(a, ((1, 6), 2)))
    assert b == S(((4, 3), 3), ((5, 9), 2), ((3, 2), 1))
    assert precedes(start, b)
    assert not precedes(b, start)


def test_split_and_combine_guards():
    assert split_multiplicity(S(((1,), 2)), 0, 1) == S(((1,), 1), ((1,), 1))
    with pytest.raises(StructureError):
        combine_degrees(S(((1,), 2), ((1,), 1)), 0, 1)
    with pytest.raises(StructureError):
        split_multiplicity(S(((1,), 2)), 0, 2)


def test_precedes_examples():
    T = S(((1, 1), 1), ((2, 0), 2))
    assert precedes(T, T)
    assert precedes(S(((1,), 1), ((1,), 1)), S(((2,), 1)))
    assert not precedes(S(((2,), 1)), S(((1,), 1), ((1,), 1)))


def test_enumerate_examples():
    assert set(enumerate_structures((1, 1))) == {S(((1, 1), 1)), S(((1, 0), 1), ((0, 1), 1))}
    got = set(enumerate_structures((3,)))
    want = {
        S(((3,), 1)),
        S(((2,), 1), ((1,), 1)),
        S(((1,), 1), ((1,), 1), ((1,), 1)),
        S(((1,), 3)),
        S(((1,), 2), ((1,), 1)),
    }
    assert got == want
    for T in enumerate_structures((2, 2)):
        assert T.total_degree() == (2, 2)


def test_enumerate_guard():
    with pytest.raises(StructureError):
        enumerate_structures((20, 20))
    assert ENUMERATION_GUARD >= 24


def test_select_max_codim():
    three = S(((1, 0), 1), ((0, 1), 1), ((1, 1), 1))
    f3 = S(((1, 0), 1), ((1, 2), 1))
    f1 = S(((0, 1), 1), ((2, 1), 1))
    assert select_max_codim([(three, 2.11e-6)], 1e-5)[0] == three
    winner, tied = select_max_codim([(f3, 8.70e-7), (f1, 1.75e-6), (three, 2.11e-6)], 1e-5)
    assert winner == three and tied == []
    with pytest.raises(StructureError):
        select_max_codim([(three, 1.0)], 1e-5)


def test_ties_break_by_distance():
    a = S(((1, 0), 1), ((1, 2), 1))
    b = S(((0, 1), 1), ((2, 1), 1))
    winner, tied = select_max_codim([(a, 2e-6), (b, 1e-6)], 1e-5)
    assert winner == b and tied == [a]


def test_single_variable_components_of_degree_two_are_excluded():
    assert S(((1, 0), 1), ((0, 1), 1)) in enumerate_structures((1, 1))
    assert all(((2, 0), 1) not in T.components for T in enumerate_structures((2, 2)))
    assert len(enumerate_structures((3,))) == 5


def test_nontrivial_structures_are_singular():
    for T in enumerate_structures((2, 2)):
        if not is_trivial(T):
            assert codim(T) > 0


LATTICE = enumerate_structures((3, 2))


def test_embedding_edges_strictly_decrease_codim():
    for T in LATTICE:
        for _, _, U in embedding_moves(T):
            assert codim(U) < codim(T)


def test_precedes_is_a_partial_order():
    for A in LATTICE:
        assert precedes(A, A)
    for A, B in itertools.permutations(LATTICE, 2):
        if precedes(A, B):
            assert not precedes(B, A)
            assert codim(A) > codim(B)
    for A, B, C in itertools.product(LATTICE[:12], repeat=3):
        if precedes(A, B) and precedes(B, C):
            assert precedes(A, C)


def test_dag_matches_golden_and_is_stable():
    assert dag_to_json((3, 2)) == dag_to_json((3, 2))
    golden = json.loads(GOLDEN.read_text())
    now = json.loads(dag_to_json((3, 2)))
    assert (len(now["nodes"]), len(now["edges"])) == (len(golden["nodes"]), len(golden["edges"]))
    assert now == golden


def test_dot_output():
    dot = dag_to_dot((1, 1))
    assert dot.startswith("digraph")
    assert "combine" in dot
    dag = stratification_dag((1, 1))
    assert len(dag["nodes"]) == 2


shape = st.sampled_from([(1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (2, 2)])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(shape, st.integers(1, 3)), min_size=1, max_size=4))
def test_moves_keep_degree_and_lower_codim(comps):
    T = FactorStructure(tuple(comps))
    for _, _, U in embedding_moves(T):
        assert U.total_degree() == T.total_degree()
        assert codim(U) < codim(T)
        assert precedes(T, U)
