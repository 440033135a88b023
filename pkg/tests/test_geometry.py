import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import (
    ac_closure_by_equations, ac_closure_by_generation, algebraic_subsets, brute_irreducible,
    brute_solve, term_functions,
)
from panel import GROUP, GROUPOID, cyclic, klein, panel, random_groupoid, random_system, unary
from uag import config
from uag.errors import PreconditionError
from uag.finalg import enumerate_homomorphisms, isomorphic
from uag.geometry import (
    RadicalOracle, ZariskiSpace, ac_closure, coordinate_algebra, decompose, defining_system,
    dual_functor, enumerate_term_maps, hom_to_point, hom_to_term_map, identity_map, in_radical,
    is_algebraic, is_irreducible, is_irredundant, make_term_map, minimal_subsystem, point_closure,
    point_set, points_as_homs, preimage, product_set, radicals_equal, restriction, sets_isomorphic,
    solve, systems_equivalent, whole_space,
)
from uag.sigterm import make_variables, parse_system, parse_term

SMALL = [a for a in panel() if a.size <= 3]


def subset_strategy(max_n=2):
    return st.builds(
        lambda i, n, seed: _subset(SMALL[i % len(SMALL)], n, seed),
        st.integers(0, 100), st.integers(1, max_n), st.integers(0, 2**32 - 1))


def _subset(A, n, seed):
    # keep the pure-Python oracles cheap: at most four points in the space
    if A.size ** n > 4:
        n = 1
    rng = np.random.default_rng(seed)
    pts = list(itertools.product(range(A.size), repeat=n))
    keep = rng.random(len(pts)) < 0.4
    return point_set(A, n, [p for p, k in zip(pts, keep) if k])


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), count=st.integers(0, 4))
def test_solve_matches_brute_force(seed, count):
    rng = np.random.default_rng(seed)
    A = random_groupoid(rng, int(rng.integers(1, 4)))
    system = random_system(rng, GROUPOID, int(rng.integers(1, 3)), count)
    Y = solve(system, A)
    assert list(Y.points) == brute_solve(system, A)
    assert Y.algebraic


def test_solve_threads_agree():
    A = cyclic(4)
    vs = make_variables("x,y,z,w,u,v")
    system = parse_system("+(x,y) = +(z,w); +(u,u) = v", GROUP, vs)
    one = solve(system, A)
    with config.using(threads=4):
        many = solve(system, A)
    assert one.points == many.points and len(one) == 256


def test_solve_rejects_mismatches():
    system = parse_system("x = x", GROUP, make_variables("x"))
    with pytest.raises(ValueError):
        solve(system, cyclic(2), 2)
    with pytest.raises(ValueError):
        solve(parse_system("x = x", GROUPOID, make_variables("x")), cyclic(2))


def test_point_set_validation():
    with pytest.raises(ValueError):
        point_set(cyclic(2), 2, [(0, 2)])
    Y = point_set(cyclic(2), 2, [(1, 1), (0, 0), (1, 1)])
    assert Y.points == ((0, 0), (1, 1))
    assert (1, 1) in Y and (0, 1) not in Y


@settings(max_examples=60, deadline=None)
@given(Y=subset_strategy())
def test_ac_closure_matches_both_oracles(Y):
    got = set(ac_closure(Y).points)
    assert got == ac_closure_by_generation(Y.algebra, Y.points, Y.n)
    assert got == ac_closure_by_equations(Y.algebra, Y.points, Y.n)


@settings(max_examples=60, deadline=None)
@given(Y=subset_strategy())
def test_closure_operator_laws(Y):
    c = ac_closure(Y)
    assert Y <= c
    assert ac_closure(c).points == c.points
    assert is_algebraic(c)
    assert radicals_equal(Y, c)
    sub = Y.with_points(Y.points[: len(Y) // 2])
    assert ac_closure(sub) <= c


@settings(max_examples=40, deadline=None)
@given(Y=subset_strategy())
def test_zariski_space_agrees_with_ac_closure(Y):
    space = ZariskiSpace(Y.algebra, Y.n)
    assert space.closure(Y).points == ac_closure(Y).points
    assert ac_closure(Y, space).points == ac_closure(Y).points


@pytest.mark.parametrize("A", SMALL, ids=lambda a: a.name)
def test_algebraic_sets_match_equalizer_oracle(A):
    for n in (1, 2):
        if A.size ** n > 4:
            continue
        sets = ZariskiSpace(A, n).algebraic_sets()
        got = sorted((frozenset(Y.points) for Y in sets), key=lambda s: (len(s), sorted(s)))
        assert got == algebraic_subsets(A, n)


@pytest.mark.parametrize("A", SMALL, ids=lambda a: a.name)
def test_irreducibility_matches_union_definition(A):
    n = 1 if A.size == 3 else 2
    closed = algebraic_subsets(A, n)
    for Z in closed:
        if not Z:
            continue
        Y = point_set(A, n, Z)
        res = is_irreducible(Y)
        assert res.irreducible == brute_irreducible(Z, closed)
        if res.irreducible:
            assert point_closure(res.generic_point, A, n).points == Y.points
        comps = decompose(Y)
        assert set().union(*(set(c.points) for c in comps)) == Z
        assert all(is_irreducible(c).irreducible for c in comps)
        assert all(not a < b for a in comps for b in comps)


def test_irreducible_preconditions():
    A = cyclic(2)
    with pytest.raises(PreconditionError):
        is_irreducible(point_set(A, 1, []))
    with pytest.raises(PreconditionError):
        decompose(point_set(A, 1, []))


def test_coordinate_algebra_is_term_function_set():
    A = cyclic(3)
    Y = point_set(A, 2, [(0, 1), (2, 2), (1, 0)])
    gamma = coordinate_algebra(Y)
    rows = {tuple(int(v) for v in r) for r in gamma.functions}
    assert rows == term_functions(A, Y.points, 2)
    for e, w in enumerate(gamma.witnesses):
        assert gamma.element_of(w) == e
    oracle = RadicalOracle(Y)
    vs = Y.variables
    t = parse_term(f"+({vs.names[0]},{vs.names[1]})", GROUP, vs)
    assert oracle.contains(t, parse_term("e", GROUP, vs)) == in_radical(
        t, parse_term("e", GROUP, vs), Y)


def test_empty_set_conventions():
    A = cyclic(2)
    E = point_set(A, 1, [])
    assert coordinate_algebra(E).size == 1
    x = parse_term("x1", GROUP, E.variables)
    assert in_radical(x, parse_term("e", GROUP, E.variables), E)


def test_points_are_homomorphisms():
    A = cyclic(4)
    Y = solve(parse_system("+(x,y) = e", GROUP, make_variables("x,y")), A)
    homs = points_as_homs(Y)
    gamma = coordinate_algebra(Y)
    all_homs = {h.mapping for h in enumerate_homomorphisms(gamma.algebra, A)}
    assert {h.mapping for h in homs.values()} == all_homs
    for p, h in homs.items():
        assert hom_to_point(h, Y) == p


def test_restriction_is_surjective():
    A = klein()
    Z = whole_space(A, 1)
    Y = point_set(A, 1, [(0,), (1,)])
    assert restriction(Z, Y).is_surjective
    with pytest.raises(PreconditionError):
        restriction(Y, Z)


def test_minimal_subsystem():
    vs = make_variables("x,y")
    s = parse_system("+(x,y) = e; +(x,y) = e; +(y,x) = e; +(x,x) = e", GROUP, vs)
    A = cyclic(4)
    r = minimal_subsystem(s, A)
    assert systems_equivalent(s, r, A)
    assert is_irredundant(r, A)
    assert len(r) == 2
    assert not is_irredundant(s, A)


def test_product_set():
    A = cyclic(2)
    vs = make_variables("x")
    Y = solve(parse_system("x = e", GROUP, vs), A)
    Z = solve(parse_system("+(x,x) = e", GROUP, vs), A)
    P = product_set(Y, Z)
    assert P.points == ((0, 0), (0, 1))
    assert P.variables.names == ("x", "x_1")
    assert solve(P.system, A).points == P.points


def test_defining_system_and_preimage():
    A = cyclic(3)
    Y = point_set(A, 2, [(0, 0), (1, 2), (2, 1)])
    assert is_algebraic(Y)
    sys = defining_system(Y)
    assert solve(sys, A).points == Y.points
    vs = Y.variables
    swap = [parse_term(vs.names[1], GROUP, vs), parse_term(vs.names[0], GROUP, vs)]
    assert preimage(make_term_map(swap, Y, Y), Y).points == Y.points


def test_term_maps_and_duality():
    A = cyclic(2)
    vs = make_variables("x,y")
    Y = solve(parse_system("x = y", GROUP, vs), A)
    Z = whole_space(A, 2)
    maps = enumerate_term_maps(Y, Z)
    gy, gz = coordinate_algebra(Y), coordinate_algebra(Z)
    homs = {h.mapping for h in enumerate_homomorphisms(gz.algebra, gy.algebra)}
    images = {dual_functor(phi).mapping for phi in maps}
    assert len(images) == len(maps) and images == homs
    for phi in maps:
        back = hom_to_term_map(dual_functor(phi), Y, Z)
        assert back == phi
    ident = identity_map(Y)
    assert dual_functor(ident).mapping == tuple(range(gy.size))
    phi = maps[-1]
    assert ident.then(phi) == phi


def test_term_map_rejects_points_outside_target():
    A = cyclic(2)
    vs = make_variables("x,y")
    Y = solve(parse_system("x = y", GROUP, vs), A)
    Z = point_set(A, 1, [(0,)])
    with pytest.raises(PreconditionError):
        make_term_map([parse_term("x", GROUP, vs)], Y, Z)


def test_sets_isomorphic():
    A = cyclic(3)
    line = whole_space(A, 1)
    diag = solve(parse_system("x = y", GROUP, make_variables("x,y")), A)
    res = sets_isomorphic(line, diag)
    assert res.isomorphic
    assert res.backward.then(res.forward) == identity_map(diag)
    point = point_set(A, 1, [(0,)])
    assert not sets_isomorphic(line, point).isomorphic


@pytest.mark.parametrize("A", [cyclic(2), unary([1, 2, 0], 0)], ids=["Z2", "C3"])
def test_coordinate_algebras_of_isomorphic_sets(A):
    Y = whole_space(A, 1)
    Z = whole_space(A, 1)
    assert isomorphic(coordinate_algebra(Y).algebra, coordinate_algebra(Z).algebra) is not None


def _diophantine(A):
    from uag.sigterm import extend_with_constants
    return extend_with_constants(A.signature, A)[1]


@pytest.mark.parametrize("A", [cyclic(2), cyclic(3), unary([0, 0, 1], 2)], ids=["Z2", "Z3", "Drop3"])
def test_points_are_closed_with_all_constants(A):
    D = _diophantine(A)
    for n in (1, 2):
        for p in itertools.product(range(A.size), repeat=n):
            assert point_closure(p, D, n).points == (p,)


def test_product_irreducible_iff_factors_are():
    D = _diophantine(cyclic(2))
    space = ZariskiSpace(D, 1)
    sets = [Y for Y in space.algebraic_sets() if not Y.is_empty]
    for Y in sets:
        for Z in sets:
            P = ac_closure(product_set(Y, Z))
            assert P.points == product_set(Y, Z).points
            both = is_irreducible(Y).irreducible and is_irreducible(Z).irreducible
            assert is_irreducible(P).irreducible == both


@pytest.mark.parametrize("A", [a for a in SMALL if a.size ** 2 <= 9], ids=lambda a: a.name)
def test_restriction_is_proper_exactly_for_strict_inclusion(A):
    n = 2 if A.size <= 2 else 1
    sets = [Y for Y in ZariskiSpace(A, n).algebraic_sets() if not Y.is_empty]
    for Y in sets:
        for Z in sets:
            if Y <= Z:
                h = restriction(Z, Y)
                assert h.is_surjective
                assert h.is_injective == (Y.points == Z.points)


@pytest.mark.parametrize("A", [cyclic(2), _diophantine(cyclic(2)), unary([1, 1], 0)],
                         ids=["Z2", "Z2c", "Step2"])
def test_duality_epi_mono_correspondence(A):
    sets = [Y for Y in ZariskiSpace(A, 2).algebraic_sets() if not Y.is_empty]
    for Y in sets[:6]:
        for Z in sets[:6]:
            for phi in enumerate_term_maps(Y, Z):
                h = dual_functor(phi)
                image = point_set(A, Z.n, phi.image())
                if h.is_surjective:
                    assert len(phi.image()) == len(Y)
                assert h.is_injective == (ac_closure(image).points == Z.points)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_descending_chains_are_short(seed):
    rng = np.random.default_rng(seed)
    A = SMALL[int(rng.integers(len(SMALL)))]
    n = 1 if A.size > 2 else 2
    Y = whole_space(A, n)
    length = 1
    while not Y.is_empty:
        drop = Y.points[int(rng.integers(len(Y)))]
        smaller = ac_closure(Y.with_points([p for p in Y.points if p != drop]))
        if smaller.points == Y.points:
            break
        assert smaller < Y
        Y = smaller
        length += 1
    assert length <= A.size ** n + 1
