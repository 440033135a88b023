"""Algebraic sets over a finite algebra and their coordinate algebras.

A point set ``Y ⊆ A^n`` is stored as a sorted tuple of points.  Its
coordinate algebra is realized as the algebra ``T(Y)`` of term functions:
the subalgebra of ``A^Y`` generated by the coordinate projections (and the
constants), each element remembering a BFS-shortest witness term.  Two
terms are congruent modulo the radical exactly when they witness the same
element, so the radical is never materialized.

Over a finite algebra several infinitary notions collapse:

* irreducibility of a non-empty algebraic ``Y`` means ``T(Y)`` embeds in
  ``A``; every homomorphism ``T(Y) -> A`` is evaluation at a point of ``Y``,
  so it is enough to look for a *generic point* ``p`` whose column of
  ``T(Y)`` has no repeated values;
* every irreducible component is the closure of one of its points, hence
  the components are the maximal point closures.
"""

from __future__ import annotations

import dataclasses
import functools
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import config
from .errors import CapacityError, PreconditionError
from .finalg import (Closure, Evaluator, FiniteAlgebra, Homomorphism, _tuple_batches, all_points,
                     extends_functionally, generate, isomorphic)
from .sigterm import Equation, EquationSystem, Term, VariableSet, format_term, substitute

Point = tuple[int, ...]


def _default_variables(n: int, avoid=()) -> VariableSet:
    names, i = [], 1
    while len(names) < n:
        cand = f"x{i}"
        if cand not in avoid:
            names.append(cand)
        i += 1
    return VariableSet(tuple(names))


@dataclasses.dataclass(frozen=True, eq=False)
class AlgebraicSet:
    """A point set in ``A^n``, optionally with a defining system.

    ``algebraic`` is ``True`` when the set is known to be algebraic (it came
    from :func:`solve` or a closure), ``None`` when not yet checked.
    """

    algebra: FiniteAlgebra
    n: int
    points: tuple[Point, ...]
    system: EquationSystem | None = None
    algebraic: bool | None = None
    variables: VariableSet | None = None

    def __post_init__(self):
        pts = tuple(sorted(set(tuple(int(c) for c in p) for p in self.points)))
        for p in pts:
            if len(p) != self.n or any(not 0 <= c < self.algebra.size for c in p):
                raise ValueError(f"point {p} is not in A^{self.n}")
        object.__setattr__(self, "points", pts)
        if self.variables is None:
            vs = self.system.variables if self.system is not None else \
                _default_variables(self.n, self.algebra.signature.names)
            object.__setattr__(self, "variables", vs)
        if len(self.variables) != self.n:
            raise ValueError("variable set does not match the dimension")

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p) -> bool:
        return tuple(p) in self._point_set

    @functools.cached_property
    def _point_set(self) -> frozenset:
        return frozenset(self.points)

    @functools.cached_property
    def array(self) -> np.ndarray:
        arr = np.array(self.points, dtype=np.int64).reshape(len(self.points), self.n)
        arr.setflags(write=False)
        return arr

    @property
    def is_empty(self) -> bool:
        return not self.points

    def position(self, p) -> int:
        return self._positions[tuple(p)]

    @functools.cached_property
    def _positions(self) -> dict:
        return {p: i for i, p in enumerate(self.points)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraicSet):
            return NotImplemented
        return (self.n == other.n and self.points == other.points
                and (self.algebra is other.algebra or self.algebra == other.algebra))

    def __hash__(self) -> int:
        return hash((self.n, self.points))

    def __le__(self, other: AlgebraicSet) -> bool:
        return self._point_set <= other._point_set

    def __lt__(self, other: AlgebraicSet) -> bool:
        return self._point_set < other._point_set

    def with_points(self, points: Iterable[Point], algebraic: bool | None = None,
                    system: EquationSystem | None = None) -> AlgebraicSet:
        return AlgebraicSet(self.algebra, self.n, tuple(points), system, algebraic, self.variables)

    def __repr__(self) -> str:
        return f"AlgebraicSet(n={self.n}, points={list(self.points)})"


def point_set(algebra: FiniteAlgebra, n: int, points: Iterable[Sequence[int]],
              variables: VariableSet | None = None) -> AlgebraicSet:
    """An arbitrary (not necessarily algebraic) subset of ``A^n``."""
    return AlgebraicSet(algebra, n, tuple(tuple(p) for p in points), None, None, variables)


def whole_space(algebra: FiniteAlgebra, n: int, variables: VariableSet | None = None) -> AlgebraicSet:
    pts = all_points(algebra, n)
    return AlgebraicSet(algebra, n, tuple(map(tuple, pts.tolist())), None, True, variables)


# ------------------------------------------------------------------ solving

def _sweep(algebra: FiniteAlgebra, pts: np.ndarray, equations) -> np.ndarray:
    threads = config.current().threads
    if threads <= 1 or len(pts) < 4096:
        return Evaluator(algebra, pts).satisfies(equations)
    chunks = np.array_split(pts, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: Evaluator(algebra, c).satisfies(equations), chunks))
    return np.concatenate(parts)


def solve(system: EquationSystem, algebra: FiniteAlgebra, n: int | None = None) -> AlgebraicSet:
    """All roots of ``system`` in ``A^n``, by sweeping every point."""
    n = system.n if n is None else n
    if n != system.n:
        raise ValueError("dimension differs from the system's variable count")
    if algebra.signature != system.signature:
        raise ValueError("algebra and system use different signatures")
    pts = all_points(algebra, n)
    mask = _sweep(algebra, pts, system.equations)
    return AlgebraicSet(algebra, n, tuple(map(tuple, pts[mask].tolist())), system, True,
                        system.variables)


def is_consistent(Y: AlgebraicSet) -> bool:
    return not Y.is_empty


def in_radical(t: Term, s: Term, Y: AlgebraicSet) -> bool:
    """Is ``t = s`` true at every point of ``Y``?  Always true on the empty set."""
    if t is s or Y.is_empty:
        return True
    ev = Evaluator(Y.algebra, Y.array)
    return bool(np.array_equal(ev(t), ev(s)))


def systems_equivalent(s1: EquationSystem, s2: EquationSystem, algebra: FiniteAlgebra,
                       n: int | None = None) -> bool:
    return solve(s1, algebra, n).points == solve(s2, algebra, n).points


def minimal_subsystem(system: EquationSystem, algebra: FiniteAlgebra,
                      n: int | None = None) -> EquationSystem:
    """An irredundant subsystem with the same solution set.

    Greedy pass: keep an equation iff it shrinks the running solution set.
    Pruning pass: drop kept equations whose removal leaves the set unchanged.
    """
    n = system.n if n is None else n
    pts = all_points(algebra, n)
    ev = Evaluator(algebra, pts)
    masks = [ev.holds(eq) for eq in system.equations]
    running = np.ones(len(pts), dtype=bool)
    kept = []
    for i, m in enumerate(masks):
        nxt = running & m
        if not np.array_equal(nxt, running):
            kept.append(i)
            running = nxt
    target = running
    for i in list(kept):
        rest = np.ones(len(pts), dtype=bool)
        for j in kept:
            if j != i:
                rest &= masks[j]
        if np.array_equal(rest, target):
            kept.remove(i)
    return system.with_equations([system.equations[i] for i in kept])


def is_irredundant(system: EquationSystem, algebra: FiniteAlgebra) -> bool:
    full = solve(system, algebra).points
    for i in range(len(system)):
        rest = system.with_equations(system.equations[:i] + system.equations[i + 1:])
        if solve(rest, algebra).points == full:
            return False
    return True


def product_set(Y: AlgebraicSet, Z: AlgebraicSet) -> AlgebraicSet:
    """``Y × Z ⊆ A^(n+m)`` with the merged system over renamed variables."""
    if not (Y.algebra is Z.algebra or Y.algebra == Z.algebra):
        raise ValueError("factors live over different algebras")
    total = len(Y) * len(Z)
    config.check("product set", total, "max_points")
    names = list(Y.variables.names)
    taken = set(names) | set(Y.algebra.signature.names)
    for v in Z.variables.names:
        cand, k = v, 0
        while cand in taken:
            k += 1
            cand = f"{v}_{k}"
        taken.add(cand)
        names.append(cand)
    variables = VariableSet(tuple(names))
    system = None
    if Y.system is not None and Z.system is not None:
        shift = [Term.var(Y.n + j) for j in range(Z.n)]
        eqs = list(Y.system.equations) + [eq.substitute(shift) for eq in Z.system.equations]
        system = EquationSystem(tuple(eqs), variables, Y.algebra.signature)
    pts = [p + q for p in Y.points for q in Z.points]
    algebraic = True if (Y.algebraic and Z.algebraic) or system is not None else None
    return AlgebraicSet(Y.algebra, Y.n + Z.n, tuple(pts), system, algebraic, variables)


# ------------------------------------------------------- term functions

class TermFunctionAlgebra:
    """``T(Y)``: term functions on ``Y`` under pointwise operations."""

    def __init__(self, base: AlgebraicSet, closure: Closure):
        self.base = base
        self.closure = closure
        self.coordinates = closure.generators  # element of x_i^Y

    @property
    def size(self) -> int:
        return self.closure.size

    @property
    def functions(self) -> np.ndarray:
        """``functions[e, j]`` is the value of element ``e`` at the ``j``-th point."""
        return self.closure.rows

    @functools.cached_property
    def witnesses(self) -> list[Term]:
        return self.closure.witnesses(self.base.variables.terms())

    def witness(self, e: int) -> str:
        return format_term(self.witnesses[e], self.base.variables)

    @functools.cached_property
    def algebra(self) -> FiniteAlgebra:
        return self.closure.algebra(name="T(Y)")

    def element_of(self, t: Term) -> int:
        """The element ``t^Y``."""
        if self.base.is_empty:
            return 0
        values = Evaluator(self.base.algebra, self.base.array)(t)
        e = self.closure.index(values)
        if e is None:
            raise AssertionError("term function outside T(Y)")
        return e

    def column(self, p) -> np.ndarray:
        """Values of all elements at the point ``p`` of ``Y``."""
        return self.functions[:, self.base.position(p)].astype(np.int64)

    def values_at(self, q: Sequence[int]) -> np.ndarray:
        """Propagate the assignment ``x_i -> q_i`` along the witnesses."""
        return self.closure.values_along(list(q), self.base.algebra)

    def extends_to_homomorphism(self, q: Sequence[int]) -> bool:
        """Does ``x_i^Y -> q_i`` extend to a homomorphism ``T(Y) -> A``?"""
        return bool(self.homomorphism_mask(np.asarray([q], dtype=np.int64))[0])

    def homomorphism_mask(self, points: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`extends_to_homomorphism` over the rows of ``points``."""
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.base.n)
        A = self.base.algebra
        cl = self.closure
        P = len(points)
        vals = np.empty((cl.size, P), dtype=np.int64)
        for i, prov in enumerate(cl.provenance):
            if prov[0] == "gen":
                vals[i] = points[:, prov[1]]
            else:
                sym, args = prov
                vals[i] = A.tables[sym][tuple(vals[a] for a in args)] if args else int(A.tables[sym])
        ok = np.ones(P, dtype=bool)
        for j, e in enumerate(self.coordinates):
            ok &= vals[e] == points[:, j]
        alg = self.algebra
        for sym, arity in alg.signature:
            tab, atab = alg.tables[sym], A.tables[sym]
            if arity == 0:
                ok &= vals[int(tab)] == int(atab)
                continue
            flat = np.asarray(tab).reshape(-1)
            for start, args in _tuple_batches([cl.size] * arity, max(P, 1)):
                lhs = atab[tuple(vals[a] for a in args)]
                rhs = vals[flat[start:start + len(args[0])]]
                ok &= (lhs == rhs).all(axis=0)
                if not ok.any():
                    return ok
        return ok


_GAMMA_CACHE: dict = {}
_GAMMA_CACHE_MAX = 512


def coordinate_algebra(Y: AlgebraicSet) -> TermFunctionAlgebra:
    """The coordinate algebra of ``Y`` as the algebra of term functions.

    For ``Y = ∅`` this is the one-element algebra (``A^∅`` has one point).
    """
    key = (Y.algebra, Y.n, Y.points)
    hit = _GAMMA_CACHE.get(key)
    if hit is not None:
        return TermFunctionAlgebra(Y, hit.closure) if hit.base.variables != Y.variables else hit
    gens = Y.array.T  # row i: the coordinate function x_i on Y
    cl = generate(Y.algebra, gens)
    tfa = TermFunctionAlgebra(Y, cl)
    if len(_GAMMA_CACHE) >= _GAMMA_CACHE_MAX:
        _GAMMA_CACHE.pop(next(iter(_GAMMA_CACHE)))
    _GAMMA_CACHE[key] = tfa
    return tfa


class RadicalOracle:
    """Decides ``(t = s) ∈ Rad(Y)`` by comparing elements of ``T(Y)``."""

    def __init__(self, Y: AlgebraicSet):
        self.base = Y
        self.gamma = coordinate_algebra(Y)

    def __contains__(self, eq: Equation) -> bool:
        return self.contains(eq.lhs, eq.rhs)

    def contains(self, t: Term, s: Term) -> bool:
        return self.gamma.element_of(t) == self.gamma.element_of(s)


def radicals_equal(Y1: AlgebraicSet, Y2: AlgebraicSet) -> bool:
    """``Rad(Y1) = Rad(Y2)``.

    ``Rad(Y1) ⊆ Rad(Y2)`` iff every ``q ∈ Y2`` defines a homomorphism
    ``T(Y1) -> A`` through ``x_i -> q_i``; each point is tested by
    generation with conflict detection.
    """
    return _rad_contained(Y1, Y2) and _rad_contained(Y2, Y1)


def _rad_contained(Y1: AlgebraicSet, Y2: AlgebraicSet) -> bool:
    base = Y1.array
    for q in Y2.points:
        if q in Y1:
            continue
        cols = np.vstack([base, np.array([q], dtype=np.int64)]).T
        if not extends_functionally(Y1.algebra, cols):
            return False
    return True


# ------------------------------------------------------------ closures

def ac_closure(Y: AlgebraicSet, space: ZariskiSpace | None = None) -> AlgebraicSet:
    """The least algebraic set containing ``Y``, i.e. ``V(Rad(Y))``.

    A point ``q`` belongs to it iff ``x_i^Y -> q_i`` extends to a
    homomorphism ``T(Y) -> A``.  Few candidates are tested one at a time by
    generation with conflict detection; many are tested together against
    ``T(Y)``.  With ``space`` its memoized closures are used.
    """
    if space is not None:
        return space.closure(Y)
    A, n = Y.algebra, Y.n
    key = (A, n, Y.points)
    hit = _CLOSURE_CACHE.get(key)
    if hit is None:
        hit = _closure_points(Y)
        if len(_CLOSURE_CACHE) >= _GAMMA_CACHE_MAX:
            _CLOSURE_CACHE.pop(next(iter(_CLOSURE_CACHE)))
        _CLOSURE_CACHE[key] = hit
    return Y.with_points(hit, algebraic=True)


_CLOSURE_CACHE: dict = {}


def _closure_points(Y: AlgebraicSet) -> tuple[Point, ...]:
    A, n = Y.algebra, Y.n
    pts = all_points(A, n)
    if len(Y) == len(pts):
        return Y.points
    outside = [q for q in map(tuple, pts.tolist()) if q not in Y]
    if len(outside) <= _FEW_CANDIDATES and (A, n, Y.points) not in _GAMMA_CACHE:
        base = Y.array
        keep = [q for q in outside
                if extends_functionally(A, np.vstack([base, np.array([q])]).T)]
        return tuple(sorted(Y.points + tuple(keep)))
    gamma = coordinate_algebra(Y)
    mask = gamma.homomorphism_mask(pts)
    return tuple(q for q, k in zip(map(tuple, pts.tolist()), mask) if k or q in Y)


# candidate counts up to this are tested point by point in ac_closure
_FEW_CANDIDATES = 64


def is_algebraic(Y: AlgebraicSet) -> bool:
    return ac_closure(Y).points == Y.points


def point_closure(p: Sequence[int], algebra: FiniteAlgebra, n: int | None = None,
                  variables: VariableSet | None = None) -> AlgebraicSet:
    """``{p}^ac``; always irreducible."""
    p = tuple(p)
    n = len(p) if n is None else n
    return ac_closure(AlgebraicSet(algebra, n, (p,), None, None, variables))


def _require_algebraic(Y: AlgebraicSet, what: str) -> None:
    if Y.algebraic:
        return
    if not is_algebraic(Y):
        raise PreconditionError(f"{what}: the point set is not algebraic")


class IrreducibilityResult(NamedTuple):
    irreducible: bool
    generic_point: Point | None


def is_irreducible(Y: AlgebraicSet) -> IrreducibilityResult:
    """Generic-point test: some ``p ∈ Y`` separates all elements of ``T(Y)``."""
    if Y.is_empty:
        raise PreconditionError("the empty set is not irreducible by convention")
    _require_algebraic(Y, "is_irreducible")
    # a generic point embeds T(Y) into A, so a larger T(Y) rules it out
    try:
        cl = generate(Y.algebra, Y.array.T, limit=Y.algebra.size)
    except CapacityError:
        return IrreducibilityResult(False, None)
    f = cl.rows
    size = f.shape[0]
    for j, p in enumerate(Y.points):
        if len(np.unique(f[:, j])) == size:
            return IrreducibilityResult(True, p)
    return IrreducibilityResult(False, None)


def decompose(Y: AlgebraicSet) -> list[AlgebraicSet]:
    """Irreducible components: the maximal point closures, by smallest point."""
    if Y.is_empty:
        raise PreconditionError("cannot decompose the empty set")
    _require_algebraic(Y, "decompose")
    closures = []
    seen = set()
    for p in Y.points:
        c = point_closure(p, Y.algebra, Y.n, Y.variables)
        if c.points not in seen:
            seen.add(c.points)
            closures.append(c)
    maximal = [c for c in closures if not any(c < d for d in closures)]
    return sorted(maximal, key=lambda c: c.points[0])


# ----------------------------------------------------- ambient closure space

class ZariskiSpace:
    """The algebraic subsets of ``A^n``, with memoized closures.

    ``q`` lies in ``Y^ac`` iff the last column of the subalgebra of
    ``A^(Y + {q})`` generated by the coordinate columns is a function of the
    others; the generation stops at the first conflict, which makes the test
    cheap for points outside the closure.
    """

    def __init__(self, algebra: FiniteAlgebra, n: int):
        self.algebra = algebra
        self.n = n
        self.space = whole_space(algebra, n)
        self._pts = self.space.array
        # closures of point subsets encoded as bit sets over ``points``
        self._memo: dict[int, int] = {}
        self._closed: set[int] = set()

    @property
    def points(self) -> tuple[Point, ...]:
        return self.space.points

    @functools.cached_property
    def clone(self) -> np.ndarray:
        """All ``n``-ary term functions as rows of values on ``A^n``."""
        return coordinate_algebra(self.space).functions.astype(np.int64)

    def closure_mask(self, mask: np.ndarray) -> np.ndarray:
        """Boolean mask of ``Y^ac`` for ``Y`` given as a mask over the points.

        Memoized closures bound the answer: ``Y^ac`` contains the closure of
        every ``Y - {y}`` (and equals it when that closure already holds
        ``y``), and lies inside every known closed superset of ``Y``.  Only
        points between the bounds are tested.
        """
        mask = np.asarray(mask, dtype=bool)
        return self._from_bits(self._closure_bits(self._to_bits(mask)))

    def _to_bits(self, mask: np.ndarray) -> int:
        return int(sum(1 << int(i) for i in np.flatnonzero(mask)))

    def _from_bits(self, bits: int) -> np.ndarray:
        return np.array([(bits >> i) & 1 for i in range(len(self._pts))], dtype=bool)

    def _closure_bits(self, bits: int) -> int:
        hit = self._memo.get(bits)
        if hit is not None:
            return hit
        total = len(self._pts)
        full = (1 << total) - 1
        members = [i for i in range(total) if bits >> i & 1]
        lower = bits
        for i in members:
            sub = self._memo.get(bits & ~(1 << i))
            if sub is None:
                continue
            if sub & bits == bits:
                self._memo[bits] = sub
                return sub
            lower |= sub
        upper = full
        for c in self._closed:
            if c & bits == bits:
                upper &= c
        out = lower
        if bits != full:
            base = self._pts[members]
            for r in range(total):
                if (upper & ~lower) >> r & 1:
                    cols = np.concatenate([base, self._pts[r:r + 1]]).T
                    if extends_functionally(self.algebra, cols):
                        out |= 1 << r
        self._memo[bits] = out
        self._closed.add(out)
        return out

    def closure(self, Y: AlgebraicSet) -> AlgebraicSet:
        mask = np.zeros(len(self.points), dtype=bool)
        for p in Y.points:
            mask[self.space.position(p)] = True
        res = self.closure_mask(mask)
        return Y.with_points([p for p, keep in zip(self.points, res) if keep], algebraic=True)

    def algebraic_masks(self) -> list[np.ndarray]:
        """Every algebraic subset, ordered by the bit pattern of its mask.

        Each closed set other than the closure of the empty set is the
        closure of a smaller closed set with one point added, so a search
        from the empty closure reaches them all.
        """
        total = len(self.points)
        config.check("subsets of A^n", 2 ** total, "max_points")
        start = self._closure_bits(0)
        found = {start}
        todo = [start]
        while todo:
            c = todo.pop()
            for r in range(total):
                if not c >> r & 1:
                    d = self._closure_bits(c | 1 << r)
                    if d not in found:
                        found.add(d)
                        todo.append(d)
        return [self._from_bits(b) for b in sorted(found)]

    def algebraic_sets(self) -> list[AlgebraicSet]:
        return [self.space.with_points([p for p, k in zip(self.points, m) if k], algebraic=True)
                for m in self.algebraic_masks()]


# --------------------------------------------------------------- term maps

@dataclasses.dataclass(frozen=True, eq=False)
class TermMap:
    """A map ``Y -> Z`` given coordinatewise by term functions on ``Y``.

    ``components[i]`` is an element of ``T(Y)``; equality of term maps is
    equality of these tuples.
    """

    source: AlgebraicSet
    target: AlgebraicSet
    components: tuple[int, ...]
    terms: tuple[Term, ...]

    @functools.cached_property
    def image_array(self) -> np.ndarray:
        g = coordinate_algebra(self.source)
        return g.functions[list(self.components), :].T.astype(np.int64).reshape(
            len(self.source), self.target.n)

    def __call__(self, p) -> Point:
        return tuple(int(x) for x in self.image_array[self.source.position(p)])

    def image(self) -> list[Point]:
        return sorted(set(map(tuple, self.image_array.tolist())))

    def __eq__(self, other) -> bool:
        return (isinstance(other, TermMap) and self.components == other.components
                and self.source == other.source and self.target == other.target)

    def __hash__(self) -> int:
        return hash(self.components)

    def then(self, after: TermMap) -> TermMap:
        """``after ∘ self``."""
        if after.source != self.target:
            raise ValueError("maps are not composable")
        gz = coordinate_algebra(after.source)
        gy = coordinate_algebra(self.source)
        pos = [after.source.position(q) for q in map(tuple, self.image_array.tolist())]
        rows = gz.functions[list(after.components)][:, pos] if pos else \
            np.zeros((len(after.components), 0), dtype=np.int64)
        comps = tuple(int(e) for e in gy.closure.indices(rows)) if len(after.components) else ()
        terms = tuple(substitute(t, self.terms) for t in after.terms)
        return TermMap(self.source, after.target, comps, terms)

    def show(self) -> list[str]:
        return [format_term(t, self.source.variables) for t in self.terms]


def make_term_map(terms: Sequence[Term], Y: AlgebraicSet, Z: AlgebraicSet) -> TermMap:
    """Validate that the terms map every point of ``Y`` into ``Z``."""
    if len(terms) != Z.n:
        raise ValueError(f"need {Z.n} component terms, got {len(terms)}")
    gamma = coordinate_algebra(Y)
    comps = tuple(gamma.element_of(t) for t in terms)
    phi = TermMap(Y, Z, comps, tuple(terms))
    for p, q in zip(Y.points, map(tuple, phi.image_array.tolist())):
        if q not in Z:
            raise PreconditionError(f"term map sends {p} to {q}, outside the target")
    return phi


def identity_map(Y: AlgebraicSet) -> TermMap:
    return make_term_map(Y.variables.terms(), Y, Y)


def preimage(phi: TermMap | Sequence[Term], Z: AlgebraicSet, n: int | None = None,
             algebra: FiniteAlgebra | None = None) -> AlgebraicSet:
    """``φ^{-1}(Z) ⊆ A^n`` as the solution set of ``Z``'s system with terms substituted."""
    if isinstance(phi, TermMap):
        terms, n, variables = phi.terms, phi.source.n, phi.source.variables
    else:
        terms, variables = tuple(phi), _default_variables(n, Z.algebra.signature.names)
    algebra = algebra or Z.algebra
    base = defining_system(Z)
    sys = EquationSystem(tuple(eq.substitute(terms) for eq in base.equations), variables,
                         base.signature)
    return solve(sys, algebra, n)


def defining_system(Y: AlgebraicSet) -> EquationSystem:
    """``Y``'s own system, or one read off the tables of ``T(Y)``.

    The table relations ``f(w(a),..) = w(f(a,..))`` together with
    ``x_i = w(x_i^Y)`` define ``Y^ac``.
    """
    if Y.system is not None:
        return Y.system
    _require_algebraic(Y, "defining_system")
    gamma = coordinate_algebra(Y)
    w = gamma.witnesses
    alg = gamma.algebra
    eqs = []
    for i, e in enumerate(gamma.coordinates):
        if w[e] is not Term.var(i):
            eqs.append(Equation(Term.var(i), w[e]))
    for sym, arity in alg.signature:
        tab = alg.tables[sym]
        for args in np.ndindex(*([alg.size] * arity)):
            lhs = Term.apply(sym, [w[a] for a in args])
            rhs = w[int(tab[args])]
            if lhs is not rhs:
                eqs.append(Equation(lhs, rhs))
    sys = EquationSystem(tuple(eqs), Y.variables, Y.algebra.signature)
    return minimal_subsystem(sys, Y.algebra)


def enumerate_term_maps(Y: AlgebraicSet, Z: AlgebraicSet) -> list[TermMap]:
    """Every term map ``Y -> Z``, in lexicographic order of component elements."""
    gamma = coordinate_algebra(Y)
    f = gamma.functions.astype(np.int64)  # (N, |Y|)
    k = Y.algebra.size
    m = Z.n
    limit = config.current().max_points
    zarr = Z.array
    states = np.zeros((1, 0), dtype=np.int64)
    codes = np.zeros((1, len(Y)), dtype=np.int64)
    for j in range(m):
        allowed = np.unique(_prefix_codes(zarr[:, :j + 1], k))
        cand = codes[:, None, :] * k + f[None, :, :]  # (S, N, |Y|)
        ok = np.isin(cand, allowed).all(axis=2) if len(Y) else np.ones(cand.shape[:2], bool)
        si, ei = np.nonzero(ok)
        if len(si) > limit:
            raise CapacityError(f"term-map enumeration exceeds {limit} partial maps")
        states = np.concatenate([states[si], ei[:, None]], axis=1)
        codes = cand[si, ei]
    if m == 0:
        states = states[:1] if (len(Z) or Y.is_empty) else states[:0]
    out = []
    for comps in states.tolist():
        terms = tuple(gamma.witnesses[e] for e in comps)
        out.append(TermMap(Y, Z, tuple(comps), terms))
    return out


def _prefix_codes(arr: np.ndarray, k: int) -> np.ndarray:
    code = np.zeros(len(arr), dtype=np.int64)
    for j in range(arr.shape[1]):
        code = code * k + arr[:, j]
    return code


def dual_functor(phi: TermMap) -> Homomorphism:
    """``T(Z) -> T(Y)``: precompose term functions on ``Z`` with ``φ``.

    It sends the coordinate function ``x_i^Z`` to the ``i``-th component of
    ``φ``; the constructor re-checks it against the tables.
    """
    gy = coordinate_algebra(phi.source)
    gz = coordinate_algebra(phi.target)
    pos = [phi.target.position(q) for q in map(tuple, phi.image_array.tolist())]
    rows = gz.functions[:, pos]
    mapping = gy.closure.indices(rows) if len(pos) else np.zeros(gz.size, dtype=np.int64)
    if (np.asarray(mapping) < 0).any():
        raise AssertionError("precomposition left T(Y)")
    return Homomorphism(gz.algebra, gy.algebra, mapping)


def hom_to_term_map(h: Homomorphism, Y: AlgebraicSet, Z: AlgebraicSet) -> TermMap:
    """Inverse of :func:`dual_functor`: read off images of ``Z``'s coordinates."""
    gy = coordinate_algebra(Y)
    gz = coordinate_algebra(Z)
    comps = tuple(h.mapping[e] for e in gz.coordinates)
    return make_term_map([gy.witnesses[c] for c in comps], Y, Z)


class IsomorphismResult(NamedTuple):
    isomorphic: bool
    forward: TermMap | None
    backward: TermMap | None


def sets_isomorphic(Y: AlgebraicSet, Z: AlgebraicSet) -> IsomorphismResult:
    """Search for mutually inverse term maps; cross-checked on ``T(Y) ≅ T(Z)``."""
    found = IsomorphismResult(False, None, None)
    if len(Y) == len(Z):
        gz = coordinate_algebra(Z)
        for phi in enumerate_term_maps(Y, Z):
            img = [tuple(r) for r in phi.image_array.tolist()]
            if len(set(img)) != len(Y):
                continue
            inverse = np.empty((len(Z), Y.n), dtype=np.int64)
            for p, q in zip(Y.points, img):
                inverse[Z.position(q)] = p
            comps = gz.closure.indices(inverse.T)
            if (comps < 0).any():
                continue
            comps = tuple(int(c) for c in comps)
            psi = TermMap(Z, Y, comps, tuple(gz.witnesses[c] for c in comps))
            found = IsomorphismResult(True, phi, psi)
            break
    algebras_iso = isomorphic(coordinate_algebra(Y).algebra, coordinate_algebra(Z).algebra)
    if (algebras_iso is not None) != found.isomorphic:
        raise AssertionError("term-map search and coordinate-algebra test disagree")
    return found


def points_as_homs(Y: AlgebraicSet) -> dict[Point, Homomorphism]:
    """Point ``p`` ↦ evaluation ``T(Y) -> A``, ``e ↦ e(p)``."""
    if Y.is_empty:
        raise PreconditionError("points_as_homs needs a non-empty set")
    _require_algebraic(Y, "points_as_homs")
    gamma = coordinate_algebra(Y)
    return {p: Homomorphism(gamma.algebra, Y.algebra, gamma.column(p)) for p in Y.points}


def hom_to_point(h: Homomorphism, Y: AlgebraicSet) -> Point:
    gamma = coordinate_algebra(Y)
    return tuple(h.mapping[e] for e in gamma.coordinates)


def restriction(Z: AlgebraicSet, Y: AlgebraicSet) -> Homomorphism:
    """``T(Z) -> T(Y)`` restricting functions, for ``Y ⊆ Z``."""
    if not Y <= Z:
        raise PreconditionError("restriction needs Y ⊆ Z")
    gz, gy = coordinate_algebra(Z), coordinate_algebra(Y)
    cols = [Z.position(p) for p in Y.points]
    mapping = gy.closure.indices(gz.functions[:, cols]) if cols else np.zeros(gz.size, np.int64)
    return Homomorphism(gz.algebra, gy.algebra, mapping)
