"""Finite decision procedures for the unification theorems.

Every verdict carries evidence that is re-checked before it is returned:
embeddings are validated against the tables, realizations are rebuilt
from their systems, and witness formulas are model-checked on both sides.
"""

from __future__ import annotations

import dataclasses
import enum
from typing import Any, Sequence

import numpy as np

from . import config
from .errors import PreconditionError
from .finalg import (Evaluator, FiniteAlgebra, Homomorphism, QuasiIdentity, check_quasi_identity,
                     check_universal_disequation, direct_product, generate, generating_set,
                     has_trivial_subalgebra, is_discriminated, is_separated, isomorphic,
                     presentation, separating_embedding)
from .geometry import (AlgebraicSet, coordinate_algebra, decompose, is_irreducible,
                       minimal_subsystem, restriction, solve)
from .sigterm import Equation, EquationSystem, Term, VariableSet, format_term


class Claim(enum.Enum):
    IS_COORDINATE_ALGEBRA = "IsCoordinateAlgebra"
    IS_IRREDUCIBLE_COORDINATE_ALGEBRA = "IsIrreducibleCoordinateAlgebra"
    IN_QVAR = "InQvar"
    EMPTY_SET_ALGEBRAIC = "EmptySetAlgebraic"
    TRIVIAL_IN_UCL = "TrivialInUcl"


# Items of the equivalence theorems that involve ultrapowers, limit algebras
# or types.  They are reported, never computed.
_IMPLIED = {
    Claim.IS_COORDINATE_ALGEBRA: (
        "C is a subdirect product of finitely many limit algebras over A (implied-by-theorem)",
        "C is defined by a complete atomic type in Th_qi(A) (implied-by-theorem)",
    ),
    Claim.IN_QVAR: (
        "C is a subdirect product of finitely many limit algebras over A (implied-by-theorem)",
        "C is defined by a complete atomic type in Th_qi(A) (implied-by-theorem)",
    ),
    Claim.IS_IRREDUCIBLE_COORDINATE_ALGEBRA: (
        "C embeds into an ultrapower of A (implied-by-theorem)",
        "C is a limit algebra over A (implied-by-theorem)",
        "C is defined by a complete atomic type in Th_forall(A) (implied-by-theorem)",
    ),
}


@dataclasses.dataclass(frozen=True)
class Verdict:
    claim: Claim
    answer: bool
    evidence: dict[str, Any]
    notes: tuple[str, ...] = ()
    conclusive_witness: bool = True

    def __bool__(self) -> bool:
        return self.answer


@dataclasses.dataclass(frozen=True)
class Realization:
    """A system whose solution set has coordinate algebra isomorphic to ``C``."""

    system: EquationSystem
    algebraic_set: AlgebraicSet
    isomorphism: Homomorphism  # C -> T(Y)


def _realize(c: FiniteAlgebra, a: FiniteAlgebra, generators: Sequence[int]) -> Realization | None:
    """``Y = V_A(S)`` for the presentation ``S`` of ``C``; checks ``T(Y) ≅ C``."""
    pres = presentation(c, generators)
    Y = solve(pres.relations, a)
    iso = isomorphic(c, coordinate_algebra(Y).algebra)
    if iso is None:
        return None
    return Realization(pres.relations, Y, iso)


def _generators(c: FiniteAlgebra, generators: Sequence[int] | None) -> tuple[int, ...]:
    gens = tuple(generators) if generators is not None else generating_set(c)
    return gens or (0,)


def _check_signatures(c: FiniteAlgebra, a: FiniteAlgebra) -> None:
    if c.signature != a.signature:
        raise PreconditionError("C and A interpret different signatures")


def coordinate_algebra_criterion(c: FiniteAlgebra, a: FiniteAlgebra,
                                 generators: Sequence[int] | None = None) -> Verdict:
    """Is ``C`` the coordinate algebra of some algebraic set over ``A``?

    For finite ``C`` this holds iff ``A`` separates ``C``.  A positive answer
    carries a direct-power embedding and a realizing system; a negative one a
    quasi-identity true in ``A`` and false in ``C``.
    """
    _check_signatures(c, a)
    gens = _generators(c, generators)
    sep = is_separated(c, a)
    if sep.separated:
        power, emb = separating_embedding(c, a, sep.family)
        real = _realize(c, a, gens)
        if real is None:
            raise AssertionError("separated algebra has no realization")
        evidence = {"separating_family": sep.family, "power": power, "embedding": emb,
                    "realization": real}
        return Verdict(Claim.IS_COORDINATE_ALGEBRA, True, evidence,
                       _IMPLIED[Claim.IS_COORDINATE_ALGEBRA])
    qi = witness_quasi_identity(c, a, gens)
    evidence = {"unseparated_pair": sep.witness, "quasi_identity": qi}
    return Verdict(Claim.IS_COORDINATE_ALGEBRA, False, evidence)


def qvar_criterion(c: FiniteAlgebra, a: FiniteAlgebra,
                   generators: Sequence[int] | None = None) -> Verdict:
    """``C ∈ Qvar(A)``; for finite algebras the same test as separation."""
    v = coordinate_algebra_criterion(c, a, generators)
    return dataclasses.replace(v, claim=Claim.IN_QVAR,
                               notes=_IMPLIED[Claim.IN_QVAR] if v.answer else ())


def irreducible_criterion(c: FiniteAlgebra, a: FiniteAlgebra,
                          generators: Sequence[int] | None = None) -> Verdict:
    """Is ``C`` the coordinate algebra of an irreducible algebraic set?

    For finite ``C`` this is discrimination by ``A``, i.e. ``C ↪ A``.
    """
    _check_signatures(c, a)
    gens = _generators(c, generators)
    disc = is_discriminated(c, a)
    if not disc.discriminated:
        return Verdict(Claim.IS_IRREDUCIBLE_COORDINATE_ALGEBRA, False,
                       {"reason": "no embedding of C into A"})
    real = _realize(c, a, gens)
    if real is None:
        raise AssertionError("discriminated algebra has no realization")
    Y = real.algebraic_set
    if Y.is_empty:
        # C = E and A has no trivial subalgebra cannot reach here: E embeds
        raise AssertionError("embedding exists but the realization is empty")
    irr = is_irreducible(Y)
    if not irr.irreducible:
        raise AssertionError("realization of a discriminated algebra is reducible")
    evidence = {"embedding": disc.embedding, "realization": real,
                "generic_point": irr.generic_point}
    return Verdict(Claim.IS_IRREDUCIBLE_COORDINATE_ALGEBRA, True, evidence,
                   _IMPLIED[Claim.IS_IRREDUCIBLE_COORDINATE_ALGEBRA])


def witness_quasi_identity(c: FiniteAlgebra, a: FiniteAlgebra,
                           generators: Sequence[int] | None = None) -> QuasiIdentity | None:
    """A quasi-identity of ``A`` refuted by ``C`` at its generators.

    ``C = <Y | S>`` by its table presentation; an unseparated pair gives
    ``(t = s) ∈ Rad_A(S)`` outside ``[S]``; the premises are an irredundant
    ``S0 ⊆ S`` with ``V_A(S0) = V_A(S)``.  ``None`` when ``A`` separates ``C``.
    """
    _check_signatures(c, a)
    sep = is_separated(c, a)
    if sep.separated:
        return None
    gens = _generators(c, generators)
    pres = presentation(c, gens)
    u, v = sep.witness
    conclusion = Equation(pres.word(u), pres.word(v))
    premises = minimal_subsystem(pres.relations, a)
    qi = QuasiIdentity(premises, conclusion)
    ok_a, _ = check_quasi_identity(a, premises, conclusion)
    point = np.array([gens], dtype=np.int64)
    ev = Evaluator(c, point)
    fails_in_c = bool(ev.satisfies(premises)[0]) and not bool(ev.holds(conclusion)[0])
    if not (ok_a and fails_in_c):
        raise AssertionError("witness quasi-identity failed re-verification")
    return qi


@dataclasses.dataclass(frozen=True)
class SubdirectDecomposition:
    components: list[AlgebraicSet]
    factors: list[FiniteAlgebra]  # T(Y_i)
    product: FiniteAlgebra
    embedding: Homomorphism  # T(Y) -> product
    projections: list[Homomorphism]  # restrictions T(Y) -> T(Y_i)


def subdirect_decomposition(Y: AlgebraicSet) -> SubdirectDecomposition:
    """``T(Y) ↪ ∏ T(Y_i)`` over the irreducible components, checked subdirect."""
    comps = decompose(Y)
    gamma = coordinate_algebra(Y)
    projections = [restriction(Y, Z) for Z in comps]
    factors = [p.target for p in projections]
    prod = direct_product(factors, name="prod")
    sizes = [f.size for f in factors]
    mapping = np.zeros(gamma.size, dtype=np.int64)
    for p, size in zip(projections, sizes):
        mapping = mapping * size + np.asarray(p.mapping, dtype=np.int64)
    emb = Homomorphism(gamma.algebra, prod, mapping)
    if not emb.is_injective:
        raise AssertionError("restriction product is not injective")
    if not all(p.is_surjective for p in projections):
        raise AssertionError("a projection is not surjective")
    return SubdirectDecomposition(comps, factors, prod, emb, projections)


def _x() -> VariableSet:
    return VariableSet(("x",))


def inconsistent_one_variable_system(a: FiniteAlgebra,
                                     depth: int | None = None) -> EquationSystem | None:
    """A finite system in one variable with no root in ``A``, or ``None``.

    Candidates are the pairwise equations between unary term functions whose
    BFS witness has depth at most ``depth``; ground and shallow equations are
    tried first, then the result is made irredundant.
    """
    depth = config.current().witness_depth if depth is None else depth
    variables = _x()
    if "x" in a.signature:
        variables = VariableSet(("x_",))
    cl = generate(a, np.arange(a.size, dtype=np.int64)[None, :])
    terms = cl.witnesses([Term.var(0)])
    keep = [i for i, t in enumerate(terms) if t.depth <= depth]
    rows = cl.rows[keep].astype(np.int64)
    ids = [terms[i] for i in keep]
    ground = [not t.variables() for t in ids]
    pairs = [(i, j) for i in range(len(ids)) for j in range(i + 1, len(ids))]
    pairs.sort(key=lambda ij: (not (ground[ij[0]] and ground[ij[1]]),
                               max(ids[ij[0]].depth, ids[ij[1]].depth), ij))
    running = np.ones(a.size, dtype=bool)
    chosen = []
    for i, j in pairs:
        nxt = running & (rows[i] == rows[j])
        if not np.array_equal(nxt, running):
            chosen.append(Equation(ids[i], ids[j]))
            running = nxt
            if not running.any():
                break
    if running.any():
        return None
    system = EquationSystem(tuple(chosen), variables, a.signature, name="inconsistent")
    return minimal_subsystem(system, a)


def empty_set_algebraic(a: FiniteAlgebra) -> Verdict:
    """``∅`` is algebraic over ``A`` iff ``A`` has no trivial subalgebra."""
    triv = has_trivial_subalgebra(a)
    if triv is not None:
        return Verdict(Claim.EMPTY_SET_ALGEBRAIC, False, {"trivial_subalgebra": triv})
    system = inconsistent_one_variable_system(a)
    if system is None:
        return Verdict(Claim.EMPTY_SET_ALGEBRAIC, True, {"inconsistent_system": None},
                       ("no inconsistent system within the witness depth",), False)
    if not solve(system, a).is_empty:
        raise AssertionError("witness system has a root")
    return Verdict(Claim.EMPTY_SET_ALGEBRAIC, True, {"inconsistent_system": system})


def trivial_in_ucl(a: FiniteAlgebra) -> Verdict:
    """``E ∈ Ucl(A)`` iff ``A`` has a trivial subalgebra.

    Otherwise the universal sentence ``∀x ⋁ t(x) ≠ s(x)`` over an
    inconsistent one-variable system holds in ``A`` and fails in ``E``.
    """
    triv = has_trivial_subalgebra(a)
    if triv is not None:
        return Verdict(Claim.TRIVIAL_IN_UCL, True, {"trivial_subalgebra": triv})
    system = inconsistent_one_variable_system(a)
    if system is None:
        return Verdict(Claim.TRIVIAL_IN_UCL, False, {"disequation_clauses": None},
                       ("no inconsistent system within the witness depth",), False)
    trivial = FiniteAlgebra.trivial(a.signature)
    if not check_universal_disequation(a, system) or check_universal_disequation(trivial, system):
        raise AssertionError("disequation witness failed re-verification")
    return Verdict(Claim.TRIVIAL_IN_UCL, False, {"disequation_clauses": system})


def show_disequation(system: EquationSystem) -> str:
    """``forall x. (t1 != s1 | ...)`` for the clauses of ``system``."""
    vs = system.variables
    clauses = [f"{format_term(eq.lhs, vs)} != {format_term(eq.rhs, vs)}" for eq in system.equations]
    return f"forall {','.join(vs.names)}. (" + " | ".join(clauses) + ")"
