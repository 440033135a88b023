"""Workspace files: signatures, algebras, systems and point sets by name.

A file is a sequence of blocks::

    signature G { op +/2; op -/1; const e; }
    algebra Z2 over G { carrier 2; + = [[0,1],[1,0]]; - = [0,1]; e = 0; }
    system S over G vars x,y { +(x,y) = e; }
    points P in Z2 dim 2 { 0,0; 1,1; }
    points Q in Z2 vars x,y { 1,1; }

Names are unique per kind; references are resolved while loading, so a
block may only mention names declared above it (or in an earlier file).
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from .errors import NameResolutionError, ParseError
from .finalg import FiniteAlgebra
from .geometry import AlgebraicSet, point_set, solve
from .sigterm import (EquationSystem, Signature, TokenStream, VariableSet,
                      parse_signature_block, parse_system_block)


@dataclasses.dataclass
class Workspace:
    signatures: dict[str, Signature] = dataclasses.field(default_factory=dict)
    algebras: dict[str, FiniteAlgebra] = dataclasses.field(default_factory=dict)
    systems: dict[str, EquationSystem] = dataclasses.field(default_factory=dict)
    point_sets: dict[str, AlgebraicSet] = dataclasses.field(default_factory=dict)
    # algebra each point set lives in
    point_algebras: dict[str, str] = dataclasses.field(default_factory=dict)

    @classmethod
    def from_files(cls, paths) -> Workspace:
        ws = cls()
        for path in paths:
            ws.load(path)
        return ws

    def load(self, path: str | Path) -> Workspace:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"{path}: not UTF-8 ({exc.reason})") from None
        return self.loads(text)

    def loads(self, text: str) -> Workspace:
        ts = TokenStream(text)
        while not ts.at_eof():
            tok = ts.peek()
            if ts.at("signature"):
                sig = parse_signature_block(ts)
                self._add(self.signatures, sig.name, sig, "signature", tok)
            elif ts.at("algebra"):
                name, alg = _parse_algebra_block(ts, self.signatures)
                self._add(self.algebras, name, alg, "algebra", tok)
            elif ts.at("system"):
                system = parse_system_block(ts, self.signatures)
                self._add(self.systems, system.name, system, "system", tok)
            elif ts.at("points"):
                name, alg_name, ps = _parse_points_block(ts, self.algebras)
                self._add(self.point_sets, name, ps, "point set", tok)
                self.point_algebras[name] = alg_name
            else:
                raise ts.error(f"expected a block keyword, found {tok.text!r}")
        return self

    @staticmethod
    def _add(table: dict, name, value, kind: str, tok) -> None:
        if name in table:
            raise ParseError(f"{kind} {name!r} defined twice", "duplicate-symbol",
                             tok.line, tok.col)
        table[name] = value

    # lookups raising the name-resolution error
    def signature(self, name: str) -> Signature:
        return _lookup(self.signatures, name, "signature")

    def algebra(self, name: str) -> FiniteAlgebra:
        return _lookup(self.algebras, name, "algebra")

    def system(self, name: str) -> EquationSystem:
        return _lookup(self.systems, name, "system")

    def point_set(self, name: str) -> AlgebraicSet:
        return _lookup(self.point_sets, name, "point set")

    def resolve_set(self, name: str, algebra_name: str | None) -> AlgebraicSet:
        """A named system solved over ``algebra_name``, or a named point set."""
        if name in self.systems:
            if algebra_name is None:
                raise NameResolutionError(f"system {name!r} needs an algebra")
            alg = self.algebra(algebra_name)
            system = self.systems[name]
            if alg.signature != system.signature:
                raise NameResolutionError(
                    f"algebra {algebra_name!r} does not interpret the signature of {name!r}")
            return solve(system, alg)
        if name in self.point_sets:
            if algebra_name is not None and self.point_algebras[name] != algebra_name:
                raise NameResolutionError(
                    f"point set {name!r} lives in {self.point_algebras[name]!r}, "
                    f"not {algebra_name!r}")
            return self.point_sets[name]
        raise NameResolutionError(f"unknown system or point set {name!r}")


def _lookup(table: dict, name: str, kind: str):
    try:
        return table[name]
    except KeyError:
        known = ", ".join(sorted(table)) or "none"
        raise NameResolutionError(f"unknown {kind} {name!r} (known: {known})") from None


def _parse_nested(ts: TokenStream):
    """A nested list of integers, or a single integer."""
    if ts.peek().kind == "int":
        return int(ts.next().text)
    ts.expect("[")
    items = []
    if not ts.at("]"):
        items.append(_parse_nested(ts))
        while ts.at(","):
            ts.next()
            items.append(_parse_nested(ts))
    ts.expect("]")
    return items


def _parse_algebra_block(ts: TokenStream, signatures) -> tuple[str, FiniteAlgebra]:
    ts.expect("algebra")
    name = ts.expect_kind("ident", "algebra name").text
    ts.expect("over")
    sig_tok = ts.expect_kind("ident", "signature name")
    if sig_tok.text not in signatures:
        raise NameResolutionError(f"{sig_tok.line}:{sig_tok.col}: unknown signature "
                                  f"{sig_tok.text!r}")
    sig = signatures[sig_tok.text]
    ts.expect("{")
    ts.expect("carrier")
    size_tok = ts.expect_kind("int", "carrier size")
    size = int(size_tok.text)
    if size < 1:
        raise ts.error("carrier size must be at least 1", "bad-table", size_tok)
    ts.expect(";")
    tables = {}
    while not ts.at("}"):
        sym_tok = ts.expect_kind("ident", "symbol name")
        sym = sym_tok.text
        if sym not in sig:
            raise ts.error(f"{sym!r} is not a symbol of {sig_tok.text}", "unknown-identifier",
                           sym_tok)
        if sym in tables:
            raise ts.error(f"table for {sym!r} given twice", "duplicate-symbol", sym_tok)
        ts.expect("=")
        value_tok = ts.peek()
        value = _parse_nested(ts)
        ts.expect(";")
        tables[sym] = _check_table(ts, value, sig.arity(sym), size, sym, value_tok)
    ts.expect("}")
    missing = [s for s in sig.names if s not in tables]
    if missing:
        raise ParseError(f"algebra {name!r} lacks a table for {missing[0]!r}", "bad-table",
                         sig_tok.line, sig_tok.col)
    return name, FiniteAlgebra(sig, size, tables, name=name)


def _check_table(ts, value, arity: int, size: int, sym: str, tok):
    try:
        arr = np.array(value, dtype=np.int64)
    except (ValueError, OverflowError):
        raise ts.error(f"table for {sym!r} is ragged", "bad-table", tok) from None
    if arr.shape != (size,) * arity:
        raise ts.error(f"table for {sym!r} has shape {list(arr.shape)}, "
                       f"expected {[size] * arity}", "bad-table", tok)
    if arr.size and (arr.min() < 0 or arr.max() >= size):
        raise ts.error(f"table for {sym!r} leaves the carrier", "bad-table", tok)
    return int(arr) if arity == 0 else arr


def _parse_points_block(ts: TokenStream, algebras) -> tuple[str, str, AlgebraicSet]:
    ts.expect("points")
    name = ts.expect_kind("ident", "point set name").text
    ts.expect("in")
    alg_tok = ts.expect_kind("ident", "algebra name")
    if alg_tok.text not in algebras:
        raise NameResolutionError(f"{alg_tok.line}:{alg_tok.col}: unknown algebra "
                                  f"{alg_tok.text!r}")
    alg = algebras[alg_tok.text]
    variables = None
    if ts.at("vars"):
        ts.next()
        names = [ts.expect_kind("ident", "variable name").text]
        while ts.at(","):
            ts.next()
            names.append(ts.expect_kind("ident", "variable name").text)
        clash = [v for v in names if v in alg.signature]
        if clash or len(set(names)) != len(names):
            raise ts.error(f"bad variable list {names}", "duplicate-symbol")
        variables = VariableSet(tuple(names))
        dim = len(names)
    else:
        ts.expect("dim")
        dim_tok = ts.expect_kind("int", "dimension")
        dim = int(dim_tok.text)
        if dim < 1:
            raise ts.error("dimension must be at least 1", "syntax", dim_tok)
    ts.expect("{")
    points = []
    while not ts.at("}"):
        tok = ts.peek()
        coords = [int(ts.expect_kind("int", "coordinate").text)]
        while ts.at(","):
            ts.next()
            coords.append(int(ts.expect_kind("int", "coordinate").text))
        ts.expect(";")
        if len(coords) != dim or any(not 0 <= c < alg.size for c in coords):
            raise ts.error(f"point {tuple(coords)} is not in {alg_tok.text}^{dim}", "bad-table",
                           tok)
        points.append(tuple(coords))
    ts.expect("}")
    return name, alg_tok.text, point_set(alg, dim, points, variables)


def load_workspace(paths) -> Workspace:
    if isinstance(paths, (str, Path)):
        paths = [paths]
    return Workspace.from_files(paths)
