import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_homs, ev, tables_of, term_functions
from panel import (
    GROUP, GROUPOID, TWO_CONST, UNARY, cyclic, groupoid, klein, panel, random_groupoid, symmetric3,
    two_const, unary,
)
from uag import config
from uag.errors import CapacityError, PreconditionError
from uag.finalg import (
    Evaluator, FiniteAlgebra, FunctionalConflict, Homomorphism, Partition, _generate_generic,
    _Keys, _last_is_function, all_points, check_quasi_identity, direct_power, direct_product,
    enumerate_homomorphisms, extends_functionally, generate, generating_set,
    has_trivial_subalgebra, is_congruence, is_discriminated, is_separated, isomorphic,
    presentation, product_index, product_tuple, quotient, separating_embedding,
    subalgebra_generated,
)
from uag.sigterm import (
    Equation, make_variables, parse_equation, parse_signature, parse_system, parse_term,
)

small_algebra = st.builds(
    lambda seed, k, kind: _make(np.random.default_rng(seed), k, kind),
    st.integers(0, 2**32 - 1), st.integers(1, 3), st.sampled_from(["groupoid", "unary", "const"]))


def _make(rng, k, kind):
    if kind == "groupoid":
        return random_groupoid(rng, k)
    if kind == "unary":
        return unary(rng.integers(0, k, k), int(rng.integers(k)))
    return two_const(rng.integers(0, k, (k, k)), int(rng.integers(k)), int(rng.integers(k)))


def test_constructor_validation():
    with pytest.raises(ValueError):
        FiniteAlgebra(GROUPOID, 0, {"*": np.zeros((0, 0), int)})
    with pytest.raises(ValueError):
        FiniteAlgebra(GROUPOID, 2, {"*": [[0, 1], [1, 2]]})
    with pytest.raises(ValueError):
        FiniteAlgebra(GROUPOID, 2, {"*": [[0, 1]]})
    with pytest.raises(ValueError):
        FiniteAlgebra(GROUPOID, 2, {})
    with pytest.raises(ValueError):
        FiniteAlgebra(GROUPOID, 2, {"*": [[0.0, 1.0], [1.0, 0.0]]})


def test_equality_and_hash():
    a, b = cyclic(3), cyclic(3, "other")
    assert a == b and hash(a) == hash(b)
    assert a != cyclic(4)


def test_evaluator_matches_oracle():
    A = symmetric3()
    vs = make_variables("x,y")
    t = parse_term("+(-(x),+(y,x))", GROUP, vs)
    pts = all_points(A, 2)
    tabs = tables_of(A)
    assert Evaluator(A, pts)(t).tolist() == [ev(t, tabs, p) for p in map(tuple, pts)]


def test_all_points_order_and_capacity():
    pts = all_points(cyclic(3), 2)
    assert [tuple(p) for p in pts] == list(itertools.product(range(3), repeat=2))
    with config.using(max_points=8):
        with pytest.raises(CapacityError):
            all_points(cyclic(3), 2)


def test_product_coding_round_trip():
    sizes = [2, 3, 4]
    for i in range(24):
        assert product_index(sizes, product_tuple(sizes, i)) == i


def test_direct_product_is_componentwise():
    P = direct_product([cyclic(2), cyclic(3)])
    assert P.size == 6
    for a, b in itertools.product(range(6), repeat=2):
        x, y = product_tuple([2, 3], a), product_tuple([2, 3], b)
        assert product_tuple([2, 3], P.apply("+", a, b)) == ((x[0] + y[0]) % 2, (x[1] + y[1]) % 3)
    assert direct_power(cyclic(3), 0).size == 1


@settings(max_examples=80, deadline=None)
@given(A=small_algebra, seed=st.integers(0, 1000), n=st.integers(1, 2))
def test_generate_matches_term_function_oracle(A, seed, n):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 5))
    pts = [tuple(int(v) for v in rng.integers(0, A.size, n)) for _ in range(m)]
    cols = np.array(pts, dtype=np.int64).T
    cl = generate(A, cols)
    got = {tuple(int(v) for v in r) for r in cl.rows}
    assert got == term_functions(A, pts, n)
    assert len(got) == cl.size
    assert list(cl.rounds) == sorted(cl.rounds)


@settings(max_examples=60, deadline=None)
@given(A=small_algebra, seed=st.integers(0, 1000))
def test_witnesses_evaluate_to_their_rows(A, seed):
    rng = np.random.default_rng(seed)
    gens = rng.integers(0, A.size, (2, 3))
    cl = generate(A, gens)
    words = cl.witnesses([Term_var(0), Term_var(1)])
    pts = gens.T
    evaluator = Evaluator(A, pts)
    for row, w in zip(cl.rows, words):
        assert evaluator(w).tolist() == row.tolist()


def Term_var(i):
    from uag.sigterm import Term
    return Term.var(i)


@settings(max_examples=60, deadline=None)
@given(A=small_algebra, seed=st.integers(0, 1000))
def test_sweep_and_generic_agree_on_order(A, seed):
    rng = np.random.default_rng(seed)
    gens = rng.integers(0, A.size, (int(rng.integers(0, 3)), int(rng.integers(1, 5))))
    fast = generate(A, gens)
    slow = _generate_generic(A, gens, 10**5, _Keys(A.size, gens.shape[1]))
    assert fast.rows.tolist() == slow.rows.tolist()
    assert fast.provenance == slow.provenance
    assert list(fast.rounds) == list(slow.rounds)


@settings(max_examples=80, deadline=None)
@given(A=small_algebra, seed=st.integers(0, 1000))
def test_watch_last_matches_post_check(A, seed):
    rng = np.random.default_rng(seed)
    gens = rng.integers(0, A.size, (int(rng.integers(1, 4)), int(rng.integers(2, 5))))
    full = generate(A, gens)
    assert extends_functionally(A, gens) == _last_is_function(full.rows)


def test_watch_last_raises():
    A = cyclic(2)
    with pytest.raises(FunctionalConflict):
        generate(A, np.array([[0, 0, 1]]), watch_last=True)


def test_generate_limit():
    with pytest.raises(CapacityError):
        generate(cyclic(5), np.array([[1, 2, 3], [0, 1, 4]]), limit=10)


def test_closure_indices_and_algebra():
    A = cyclic(4)
    cl = generate(A, np.array([[2]]))
    assert sorted(cl.rows[:, 0].tolist()) == [0, 2]
    assert cl.index([2]) is not None and cl.index([1]) is None
    sub = cl.algebra()
    assert sub.size == 2 and isomorphic(sub, cyclic(2)) is not None


def test_subalgebra_and_generating_set():
    A = symmetric3()
    gens = generating_set(A)
    assert subalgebra_generated(A, gens).algebra.size == 6
    assert len(subalgebra_generated(A, [gens[0]]).inclusion) < 6
    assert generating_set(cyclic(1)) == ()


@settings(max_examples=60, deadline=None)
@given(A=small_algebra, B=small_algebra)
def test_homomorphisms_match_brute_force(A, B):
    if A.signature != B.signature:
        return
    got = sorted(h.mapping for h in enumerate_homomorphisms(A, B))
    assert got == sorted(brute_homs(A, B))


def test_homomorphisms_with_duplicate_generators():
    A = cyclic(3)
    assert len(list(enumerate_homomorphisms(A, A, generators=[1, 1]))) == 3
    with pytest.raises(PreconditionError):
        list(enumerate_homomorphisms(cyclic(4), cyclic(4), generators=[2]))


def test_homomorphism_validation_and_composition():
    with pytest.raises(ValueError):
        Homomorphism(cyclic(2), cyclic(2), (1, 0))
    h = Homomorphism(cyclic(4), cyclic(2), (0, 1, 0, 1))
    assert h.is_surjective and not h.is_injective
    assert h.kernel() == Partition([0, 1, 0, 1])
    g = Homomorphism(cyclic(2), cyclic(4), (0, 2))
    assert h.compose(g).mapping == (0, 2, 0, 2)


def test_separation_and_discrimination():
    V = klein()
    res = is_separated(V, cyclic(2))
    assert res.separated and res.witness is None
    power, emb = separating_embedding(V, cyclic(2), res.family)
    assert emb.is_injective
    res = is_separated(cyclic(4), cyclic(2))
    assert not res.separated and res.witness == (0, 2)
    assert is_discriminated(cyclic(2), cyclic(4)).discriminated
    assert not is_discriminated(cyclic(3), cyclic(4)).discriminated


def test_quotient():
    A = cyclic(4)
    theta = Partition([0, 1, 0, 1])
    assert is_congruence(A, theta)
    q, h = quotient(A, theta)
    assert isomorphic(q, cyclic(2)) is not None
    assert h.is_surjective
    with pytest.raises(PreconditionError):
        quotient(A, Partition([0, 0, 1, 1]))
    with pytest.raises(ValueError):
        Partition.from_blocks([[0, 1], [1, 2]])


@settings(max_examples=60, deadline=None)
@given(A=small_algebra, seed=st.integers(0, 1000))
def test_kernels_are_congruences(A, seed):
    for h in enumerate_homomorphisms(A, A):
        assert is_congruence(A, h.kernel())
        q, _ = quotient(A, h.kernel())
        assert q.size == len(set(h.mapping))


def test_has_trivial_subalgebra():
    assert has_trivial_subalgebra(cyclic(3)) == 0
    assert has_trivial_subalgebra(two_const([[0, 1], [1, 1]], 0, 1)) is None
    assert has_trivial_subalgebra(groupoid([[1, 0], [0, 0]])) is None
    assert has_trivial_subalgebra(groupoid([[1, 0], [0, 1]])) == 1


def test_quasi_identity_check():
    vs = make_variables("x")
    prem = parse_system("+(+(x,x),+(x,x)) = e", GROUP, vs)
    concl = parse_equation("+(x,x) = e", GROUP, vs)
    assert check_quasi_identity(cyclic(2), prem, concl) == (True, None)
    assert check_quasi_identity(cyclic(4), prem, concl) == (False, (1,))


@pytest.mark.parametrize("A", panel(), ids=lambda a: a.name)
def test_presentation_relations_hold_and_define(A):
    pres = presentation(A)
    gens = pres.generators
    assert generate(A, np.array(gens, dtype=np.int64).reshape(-1, 1)).size == A.size
    point = gens if gens else (0,)
    evaluator = Evaluator(A, [point])
    assert all(bool(evaluator.holds(eq)[0]) for eq in pres.relations)
    assert [int(evaluator(w)[0]) for w in pres.words] == list(range(A.size))


def test_presentation_rejects_non_generators():
    with pytest.raises(PreconditionError):
        presentation(cyclic(4), [2])


@settings(max_examples=60, deadline=None)
@given(C=small_algebra, A=small_algebra)
def test_discrimination_implies_separation(C, A):
    if C.signature != A.signature:
        return
    if is_discriminated(C, A).discriminated:
        assert is_separated(C, A).separated


def test_quotient_kernel_is_the_partition():
    A = klein()
    theta = Partition([0, 0, 1, 1])
    q, h = quotient(A, theta)
    assert h.kernel() == theta and h.is_surjective


def test_universal_disequation():
    from uag.finalg import check_universal_disequation
    sig = parse_signature("signature P { op +/2; const c1; }")
    Z2 = FiniteAlgebra(sig, 2, {"+": [[0, 1], [1, 0]], "c1": 1})
    vs = make_variables("x")
    assert check_universal_disequation(Z2, parse_system("+(x,x) = c1", sig, vs))
    assert not check_universal_disequation(Z2, parse_system("x = x", sig, vs))
    trivial = FiniteAlgebra.trivial(sig)
    assert not check_universal_disequation(trivial, parse_system("+(x,x) = c1", sig, vs))
