import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from panel import GROUP, cyclic, groupoid, klein, panel, random_groupoid, symmetric3, two_const
from uag.errors import PreconditionError
from uag.finalg import (
    FiniteAlgebra, direct_power, find_embedding, generate, holds_quasi_identity, is_separated,
    isomorphic,
)
from uag.geometry import coordinate_algebra, decompose, is_irreducible, solve, whole_space
from uag.sigterm import make_variables, parse_system
from uag.unification import (
    Claim, coordinate_algebra_criterion, empty_set_algebraic, inconsistent_one_variable_system,
    irreducible_criterion, qvar_criterion, show_disequation, subdirect_decomposition,
    trivial_in_ucl, witness_quasi_identity,
)


def test_klein_is_coordinate_algebra_over_z2():
    v = coordinate_algebra_criterion(klein(), cyclic(2))
    assert v.answer and v.claim is Claim.IS_COORDINATE_ALGEBRA
    real = v.evidence["realization"]
    assert isomorphic(coordinate_algebra(real.algebraic_set).algebra, klein()) is not None
    assert v.evidence["embedding"].is_injective
    assert any("implied-by-theorem" in note for note in v.notes)


def test_z4_is_not_coordinate_algebra_over_z2():
    v = coordinate_algebra_criterion(cyclic(4), cyclic(2))
    assert not v.answer
    qi = v.evidence["quasi_identity"]
    assert holds_quasi_identity(cyclic(2), qi)
    assert not holds_quasi_identity(cyclic(4), qi)
    assert qi.show() == "forall y1. (true -> e = +(y1,y1))"


def test_qvar_matches_coordinate_criterion():
    for c, a in [(klein(), cyclic(2)), (cyclic(4), cyclic(2)), (cyclic(2), cyclic(4))]:
        assert qvar_criterion(c, a).answer == coordinate_algebra_criterion(c, a).answer
        assert qvar_criterion(c, a).claim is Claim.IN_QVAR


def test_irreducible_criterion():
    v = irreducible_criterion(cyclic(2), cyclic(4))
    assert v.answer
    Y = v.evidence["realization"].algebraic_set
    assert is_irreducible(Y).irreducible
    assert not irreducible_criterion(klein(), cyclic(2)).answer


def test_signature_mismatch():
    with pytest.raises(PreconditionError):
        coordinate_algebra_criterion(cyclic(2), groupoid([[0]]))


def test_no_quasi_identity_when_separated():
    assert witness_quasi_identity(klein(), cyclic(2)) is None


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_criteria_are_consistent_on_random_groupoids(seed):
    rng = np.random.default_rng(seed)
    a = random_groupoid(rng, int(rng.integers(1, 4)))
    power = direct_power(a, int(rng.integers(1, 3)))
    g = rng.integers(0, power.size, int(rng.integers(1, 3)))
    cl = generate(power, g.reshape(-1, 1), limit=power.size)
    c = cl.algebra()
    if c.size > 4:
        return
    v = coordinate_algebra_criterion(c, a)
    assert v.answer, "a subalgebra of a power is separated"
    irr = irreducible_criterion(c, a)
    assert irr.answer == (find_embedding(c, a) is not None)


def test_subdirect_decomposition():
    A = cyclic(3)
    Y = solve(parse_system("+(x,y) = +(y,y)", GROUP, make_variables("x,y")), A)
    sub = subdirect_decomposition(Y)
    assert sub.embedding.is_injective
    assert all(p.is_surjective for p in sub.projections)
    assert [c.points for c in sub.components] == [c.points for c in decompose(Y)]
    assert len(subdirect_decomposition(whole_space(cyclic(2), 1)).components) == 1
    plane = subdirect_decomposition(whole_space(cyclic(2), 2))
    assert len(plane.components) > 1 and plane.embedding.is_injective


def test_empty_set_and_trivial_algebra():
    d = two_const([[0, 1], [1, 1]], 0, 1)
    v = empty_set_algebraic(d)
    assert v.answer
    system = v.evidence["inconsistent_system"]
    assert solve(system, d).is_empty
    u = trivial_in_ucl(d)
    assert not u.answer
    text = show_disequation(u.evidence["disequation_clauses"])
    assert text.startswith("forall x. (") and "!=" in text
    for A in (cyclic(3), symmetric3()):
        assert not empty_set_algebraic(A).answer
        assert trivial_in_ucl(A).answer


@pytest.mark.parametrize("A", panel(), ids=lambda a: a.name)
def test_empty_set_dichotomy(A):
    assert empty_set_algebraic(A).answer != trivial_in_ucl(A).answer
    system = inconsistent_one_variable_system(A)
    if system is not None:
        assert solve(system, A).is_empty


def test_trivial_algebra_is_coordinate_algebra_of_empty_set():
    d = two_const([[0, 1], [1, 1]], 0, 1)
    e = FiniteAlgebra.trivial(d.signature)
    assert coordinate_algebra_criterion(e, d).answer
    assert not irreducible_criterion(e, d).answer


@pytest.mark.parametrize("A", [cyclic(3), two_const([[0, 1], [1, 1]], 0, 1), groupoid([[1, 0], [0, 0]])],
                         ids=["Z3", "D2max", "Nand2"])
def test_presentation_radical_equals_closure(A):
    from panel import random_term
    from uag.congruence import in_closure
    from uag.finalg import presentation
    from uag.geometry import in_radical, whole_space
    rng = np.random.default_rng(5)
    C = coordinate_algebra(whole_space(A, 1)).algebra
    pres = presentation(C)
    Y = solve(pres.relations, A)
    symbols = list(A.signature)
    k = pres.relations.n
    for _ in range(60):
        t, s = random_term(rng, symbols, k, 3), random_term(rng, symbols, k, 3)
        assert in_radical(t, s, Y) == in_closure(t, s, pres.relations)
