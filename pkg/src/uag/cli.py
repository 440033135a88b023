"""Command-line workbench: ``uag SUBCOMMAND FILE ...``.

Results go to stdout (or ``-o FILE``) as deterministic JSON, or as an
indented text report with ``--format text``.  Exit codes: 0 ok, 2 parse
error, 3 capacity exceeded, 4 unresolved name, 5 precondition violated.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from . import __version__, config
from .congruence import in_closure
from .dsl import Workspace
from .errors import NameResolutionError, ParseError, PreconditionError, UagError
from .finalg import (FiniteAlgebra, Homomorphism, QuasiIdentity, enumerate_homomorphisms,
                     presentation)
from .geometry import (AlgebraicSet, ac_closure, coordinate_algebra, decompose, dual_functor,
                       enumerate_term_maps, in_radical, is_irreducible, is_irredundant,
                       minimal_subsystem, sets_isomorphic, systems_equivalent)
from .sigterm import EquationSystem, format_term, parse_equation
from .unification import (Realization, SubdirectDecomposition, Verdict,
                          coordinate_algebra_criterion, empty_set_algebraic,
                          irreducible_criterion, qvar_criterion, show_disequation,
                          subdirect_decomposition, trivial_in_ucl)


# ------------------------------------------------------------ rendering

def _points(Y: AlgebraicSet) -> list[list[int]]:
    return [list(p) for p in Y.points]


def _set_json(Y: AlgebraicSet) -> dict:
    return {
        "dim": Y.n,
        "variables": list(Y.variables.names),
        "points": _points(Y),
        "consistent": not Y.is_empty,
        "system": Y.system.show_inline() if Y.system is not None else None,
    }


def _hom_json(h: Homomorphism) -> list[int]:
    return list(h.mapping)


def _algebra_json(alg: FiniteAlgebra) -> dict:
    return {"size": alg.size, "show": alg.show()}


def _realization_json(r: Realization) -> dict:
    return {"system": r.system.show_inline(), "variables": list(r.system.variables.names),
            "points": _points(r.algebraic_set), "isomorphism": _hom_json(r.isomorphism)}


def _qi_json(qi: QuasiIdentity) -> dict:
    vs = qi.premises.variables
    return {"formula": qi.show(), "premises": [eq.show(vs) for eq in qi.premises],
            "conclusion": qi.conclusion.show(vs), "variables": list(vs.names)}


def _evidence_json(value: Any) -> Any:
    if isinstance(value, Homomorphism):
        return _hom_json(value)
    if isinstance(value, FiniteAlgebra):
        return _algebra_json(value)
    if isinstance(value, Realization):
        return _realization_json(value)
    if isinstance(value, QuasiIdentity):
        return _qi_json(value)
    if isinstance(value, EquationSystem):
        return {"system": value.show_inline(), "variables": list(value.variables.names)}
    if isinstance(value, (list, tuple)):
        return [_evidence_json(v) for v in value]
    return value


def _verdict_json(v: Verdict) -> dict:
    evidence = {k: _evidence_json(x) for k, x in v.evidence.items()}
    clauses = v.evidence.get("disequation_clauses")
    if isinstance(clauses, EquationSystem):
        evidence["formula"] = show_disequation(clauses)
    return {"claim": v.claim.value, "answer": v.answer, "evidence": evidence,
            "notes": list(v.notes), "witness_found": v.conclusive_witness}


def _text(obj: Any, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            val = obj[key]
            if isinstance(val, (dict, list)) and val and not _flat(val):
                lines.append(f"{pad}{key}:")
                lines.extend(_text(val, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_scalar(val)}")
    elif isinstance(obj, list):
        for val in obj:
            if isinstance(val, (dict, list)) and val and not _flat(val):
                lines.append(f"{pad}-")
                lines.extend(_text(val, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(val)}")
    else:
        lines.append(pad + _scalar(obj))
    return lines


def _flat(val) -> bool:
    return isinstance(val, list) and all(not isinstance(v, (dict, list)) or
                                         (isinstance(v, list) and
                                          all(not isinstance(w, (dict, list)) for w in v))
                                         for v in val)


def _scalar(val) -> str:
    if isinstance(val, str):
        return val if "\n" not in val else val.replace("\n", " ")
    return json.dumps(val, ensure_ascii=False, separators=(",", ":"))


def render(result: dict, fmt: str) -> str:
    if fmt == "text":
        return "\n".join(_text(result)) + "\n"
    return json.dumps(result, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# ------------------------------------------------------------- commands

def _set_arg(ws: Workspace, name: str, algebra: str) -> AlgebraicSet:
    return ws.resolve_set(name, algebra)


def cmd_solve(ws: Workspace, args) -> dict:
    system = ws.system(args.system)
    Y = ws.resolve_set(args.system, args.algebra)
    out = _set_json(Y)
    out["system"] = system.show_inline()
    return out


def cmd_gamma(ws: Workspace, args) -> dict:
    Y = _set_arg(ws, args.set, args.algebra)
    gamma = coordinate_algebra(Y)
    closure = ac_closure(Y)
    out = _set_json(Y)
    out["algebraic"] = closure.points == Y.points
    out["closure"] = _points(closure)
    out["gamma"] = {
        "size": gamma.size,
        "witnesses": [gamma.witness(e) for e in range(gamma.size)],
        "coordinates": list(gamma.coordinates),
        "functions": gamma.functions.astype(int).tolist(),
    }
    return out


def _algebraic(Y: AlgebraicSet, what: str) -> AlgebraicSet:
    closure = ac_closure(Y)
    if closure.points != Y.points:
        raise PreconditionError(f"{what}: the point set is not algebraic")
    return closure


def cmd_decompose(ws: Workspace, args) -> dict:
    Y = _algebraic(_set_arg(ws, args.set, args.algebra), "decompose")
    comps = decompose(Y)
    irr = is_irreducible(Y)
    union = sorted({p for c in comps for p in c.points})
    incomparable = all(not (a <= b) for a in comps for b in comps if a is not b)
    sub = subdirect_decomposition(Y)
    return {
        "points": _points(Y),
        "irreducible": irr.irreducible,
        "generic_point": list(irr.generic_point) if irr.generic_point else None,
        "components": [{"points": _points(c),
                        "generic_point": list(is_irreducible(c).generic_point),
                        "gamma_size": coordinate_algebra(c).size} for c in comps],
        "union_ok": union == list(Y.points),
        "incomparable": incomparable,
        "subdirect": _subdirect_json(sub),
    }


def _subdirect_json(sub: SubdirectDecomposition) -> dict:
    return {"factor_sizes": [f.size for f in sub.factors], "product_size": sub.product.size,
            "embedding": _hom_json(sub.embedding),
            "injective": sub.embedding.is_injective,
            "projections_surjective": all(p.is_surjective for p in sub.projections)}


def cmd_reduce(ws: Workspace, args) -> dict:
    system = ws.system(args.system)
    alg = ws.algebra(args.algebra)
    if alg.signature != system.signature:
        raise NameResolutionError(f"algebra {args.algebra!r} does not interpret the signature "
                                  f"of {args.system!r}")
    reduced = minimal_subsystem(system, alg)
    return {
        "input": system.show_inline(),
        "input_size": len(system),
        "system": reduced.show(),
        "reduced": reduced.show_inline(),
        "reduced_size": len(reduced),
        "equivalent": systems_equivalent(system, reduced, alg),
        "irredundant": is_irredundant(reduced, alg),
    }


def cmd_radical_member(ws: Workspace, args) -> dict:
    Y = _set_arg(ws, args.set, args.algebra)
    eq = parse_equation(args.equation, Y.algebra.signature, Y.variables)
    return {"equation": eq.show(Y.variables), "member": in_radical(eq.lhs, eq.rhs, Y),
            "points": _points(Y)}


def cmd_closure_member(ws: Workspace, args) -> dict:
    system = ws.system(args.system)
    eq = parse_equation(args.equation, system.signature, system.variables)
    return {"equation": eq.show(system.variables), "system": system.show_inline(),
            "member": in_closure(eq.lhs, eq.rhs, system)}


def _generators(text: str | None):
    if text is None:
        return None
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ParseError(f"bad generator list {text!r}") from None


def cmd_check(ws: Workspace, args) -> dict:
    if args.claim in ("empty-set", "trivial-ucl"):
        alg = ws.algebra(args.names[0])
        if len(args.names) != 1:
            raise ParseError(f"check {args.claim} takes one algebra name")
        verdict = empty_set_algebraic(alg) if args.claim == "empty-set" else trivial_in_ucl(alg)
    else:
        if len(args.names) != 2:
            raise ParseError(f"check {args.claim} takes two algebra names: C A")
        c, a = ws.algebra(args.names[0]), ws.algebra(args.names[1])
        gens = _generators(args.generators)
        if gens is not None and any(not 0 <= g < c.size for g in gens):
            raise PreconditionError("generator outside the carrier of C")
        fn = {"coord": coordinate_algebra_criterion, "irr-coord": irreducible_criterion,
              "qvar": qvar_criterion}[args.claim]
        verdict = fn(c, a, gens)
    out = _verdict_json(verdict)
    out["algebras"] = list(args.names)
    return out


def cmd_duality(ws: Workspace, args) -> dict:
    Y = _algebraic(_set_arg(ws, args.source, args.algebra), "duality")
    Z = _algebraic(_set_arg(ws, args.target, args.algebra), "duality")
    maps = enumerate_term_maps(Y, Z)
    gy, gz = coordinate_algebra(Y), coordinate_algebra(Z)
    homs = list(enumerate_homomorphisms(gz.algebra, gy.algebra))
    table = []
    images = set()
    for phi in maps:
        h = dual_functor(phi)
        images.add(h.mapping)
        table.append({"term_map": phi.show(), "homomorphism": _hom_json(h)})
    hom_set = {h.mapping for h in homs}
    return {
        "source": _points(Y),
        "target": _points(Z),
        "morphisms": len(maps),
        "homomorphisms": len(homs),
        "bijection": len(images) == len(maps) and images == hom_set,
        "table": table,
    }


def cmd_isomorphic(ws: Workspace, args) -> dict:
    Y = _algebraic(_set_arg(ws, args.first, args.algebra), "isomorphic")
    Z = _algebraic(_set_arg(ws, args.second, args.algebra), "isomorphic")
    res = sets_isomorphic(Y, Z)
    return {
        "first": _points(Y),
        "second": _points(Z),
        "isomorphic": res.isomorphic,
        "forward": res.forward.show() if res.forward else None,
        "backward": res.backward.show() if res.backward else None,
        "gamma_sizes": [coordinate_algebra(Y).size, coordinate_algebra(Z).size],
    }


def cmd_present(ws: Workspace, args) -> dict:
    alg = ws.algebra(args.algebra)
    pres = presentation(alg, _generators(args.generators))
    vs = pres.relations.variables
    return {"generators": list(pres.generators), "relations": pres.relations.show_inline(),
            "words": [format_term(w, vs) for w in pres.words]}


# --------------------------------------------------------------- parser

CLAIMS = ("coord", "irr-coord", "qvar", "empty-set", "trivial-ucl")


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", metavar="PATH", default=d(None),
                        help="JSON file with run settings")
    parser.add_argument("--format", choices=("json", "text"), default=d(None))
    parser.add_argument("--threads", type=int, metavar="N", default=d(None))
    parser.add_argument("--max-points", type=int, metavar="N", default=d(None))
    parser.add_argument("--max-closure", type=int, metavar="N", default=d(None))
    parser.add_argument("--witness-depth", type=int, metavar="D", default=d(None))
    parser.add_argument("--seed", type=int, default=d(None))
    parser.add_argument("-o", "--output", metavar="FILE", default=d(None),
                        help="write the result here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uag",
                                     description="Algebraic geometry over finite algebras.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_text, before_file=None):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _common(p, suppress=True)
        if before_file:
            before_file(p)
        p.add_argument("file", help="DSL workspace file")
        p.set_defaults(func=func)
        return p

    p = add("solve", cmd_solve, "solution set of a system over an algebra")
    p.add_argument("system")
    p.add_argument("algebra")

    for name, func, help_text in (
            ("gamma", cmd_gamma, "coordinate algebra and ac-closure of a set"),
            ("decompose", cmd_decompose, "irreducible components of an algebraic set")):
        p = add(name, func, help_text)
        p.add_argument("set", help="system or point-set name")
        p.add_argument("algebra")

    p = add("reduce", cmd_reduce, "irredundant equivalent subsystem")
    p.add_argument("system")
    p.add_argument("algebra")

    p = add("radical-member", cmd_radical_member, "is an equation in the radical of a set")
    p.add_argument("set")
    p.add_argument("algebra")
    p.add_argument("equation", help="'t = s'")

    p = add("closure-member", cmd_closure_member,
            "is an equation in the congruent closure of a system")
    p.add_argument("system")
    p.add_argument("equation")

    p = add("check", cmd_check, "decide a structural claim with evidence",
            lambda q: q.add_argument("claim", choices=CLAIMS))
    p.add_argument("names", nargs="+", metavar="ALGEBRA",
                   help="C A for coord/irr-coord/qvar, A otherwise")
    p.add_argument("--generators", metavar="LIST", help="comma-separated generators of C")

    p = add("duality", cmd_duality, "term maps Y->Z against Hom(T(Z),T(Y))")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("algebra")

    p = add("isomorphic", cmd_isomorphic, "isomorphism of algebraic sets by term maps")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("algebra")

    p = add("present", cmd_present, "multiplication-table presentation of an algebra")
    p.add_argument("algebra")
    p.add_argument("--generators", metavar="LIST")
    return parser


def _run_config(args) -> config.RunConfig:
    overrides = {"format": args.format, "threads": args.threads, "max_points": args.max_points,
                 "max_closure": args.max_closure, "witness_depth": args.witness_depth,
                 "seed": args.seed}
    if args.config:
        return config.RunConfig.from_file(args.config, **overrides)
    return config.RunConfig(**{k: v for k, v in overrides.items() if v is not None})


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        try:
            cfg = _run_config(args)
        except (ValueError, TypeError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad configuration: {exc}") from None
        except OSError as exc:
            raise NameResolutionError(f"cannot read config: {exc.strerror}") from None
        with config.using(cfg):
            try:
                ws = Workspace().load(args.file)
            except OSError as exc:
                raise NameResolutionError(f"cannot read {args.file}: {exc.strerror}") from None
            result = args.func(ws, args)
            text = render(result, cfg.format)
    except UagError as exc:
        print(f"uag: error: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
