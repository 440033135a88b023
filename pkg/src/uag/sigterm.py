"""Signatures, variables, hash-consed terms, equations and systems.

Also hosts the lexer and the term-level parts of the DSL grammar::

    signature NAME { op IDENT/ARITY; const IDENT; ... }
    system NAME over SIG vars x,y,... { t = s; ... }

Terms are written prefix only, ``IDENT`` or ``IDENT(t,...,t)``.
"""

from __future__ import annotations

import dataclasses
import re
import threading
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, Sequence

from .errors import ParseError

if TYPE_CHECKING:
    from .finalg import FiniteAlgebra

# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<int>-?\d+)
  | (?P<ident>[^\W\d]\w*'*)
  | (?P<opsym>[+\-*^~!&|<>.@$%?·∘∧∨⊕⊗]+)
  | (?P<punct>[{}()\[\],;=/:])
""", re.VERBOSE)


@dataclasses.dataclass(frozen=True)
class Token:
    kind: str  # 'int', 'ident', 'punct', 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", "syntax",
                             line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token("ident" if kind == "opsym" else kind, m.group(),
                                line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("punct", "ident") and tok.text == text

    def at_eof(self) -> bool:
        return self.peek().kind == "eof"

    def error(self, message: str, kind: str = "syntax", tok: Token | None = None):
        tok = tok or self.peek()
        return ParseError(message, kind, tok.line, tok.col)

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind not in ("punct", "ident"):
            shown = tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        return self.next()

    def expect_kind(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            shown = tok.text or "end of input"
            raise self.error(f"expected {what}, found {shown!r}")
        return self.next()


# ----------------------------------------------------------- signatures

@dataclasses.dataclass(frozen=True)
class Signature:
    """Ordered function symbols with arities; arity 0 means constant."""

    symbols: tuple[tuple[str, int], ...] = ()
    name: str | None = dataclasses.field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple((str(s), int(a)) for s, a in self.symbols))
        seen = set()
        for sym, arity in self.symbols:
            if sym in seen:
                raise ParseError(f"symbol {sym!r} declared twice", "duplicate-symbol")
            if arity < 0:
                raise ParseError(f"symbol {sym!r} has negative arity", "negative-arity")
            seen.add(sym)
        object.__setattr__(self, "_arity", dict(self.symbols))

    def __contains__(self, sym: str) -> bool:
        return sym in self._arity

    def __iter__(self) -> Iterator[tuple[str, int]]:
        return iter(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def arity(self, sym: str) -> int:
        return self._arity[sym]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.symbols)

    @property
    def constants(self) -> tuple[str, ...]:
        return tuple(s for s, a in self.symbols if a == 0)

    def extended(self, extra: Iterable[tuple[str, int]], name: str | None = None) -> Signature:
        return Signature(self.symbols + tuple(extra), name if name is not None else self.name)


@dataclasses.dataclass(frozen=True)
class VariableSet:
    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if not self.names:
            raise ParseError("a variable set needs at least one variable", "syntax")
        if len(set(self.names)) != len(self.names):
            raise ParseError("duplicate variable name", "duplicate-symbol")
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.names)})

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def index(self, name: str) -> int:
        """0-based coordinate index of a variable."""
        return self._index[name]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def terms(self) -> tuple[Term, ...]:
        return tuple(Term.var(i) for i in range(len(self.names)))


def make_variables(names: str | Sequence[str]) -> VariableSet:
    if isinstance(names, str):
        names = [v.strip() for v in names.split(",") if v.strip()]
    return VariableSet(tuple(names))


# ---------------------------------------------------------------- terms

class Term:
    """A node of the global term DAG.

    Terms are interned: two structurally equal terms are the same object,
    so ``==`` is identity and ``id`` is a stable canonical number.
    Variables are stored by their 0-based coordinate index.
    """

    __slots__ = ("id", "symbol", "index", "args", "depth", "size")

    _table: dict = {}
    _lock = threading.Lock()

    def __init__(self, *_):
        raise TypeError("use Term.var or Term.apply")

    @classmethod
    def _intern(cls, key, symbol, index, args) -> Term:
        t = cls._table.get(key)
        if t is not None:
            return t
        with cls._lock:
            t = cls._table.get(key)
            if t is None:
                t = object.__new__(cls)
                t.id = len(cls._table)
                t.symbol = symbol
                t.index = index
                t.args = args
                t.depth = 1 + max((a.depth for a in args), default=0) if symbol is not None else 0
                t.size = 1 + sum(a.size for a in args)
                cls._table[key] = t
        return t

    @classmethod
    def var(cls, index: int) -> Term:
        if index < 0:
            raise ValueError("variable index must be non-negative")
        return cls._intern(("v", index), None, index, ())

    @classmethod
    def apply(cls, symbol: str, args: Sequence[Term] = ()) -> Term:
        args = tuple(args)
        return cls._intern((symbol, tuple(a.id for a in args)), symbol, None, args)

    @property
    def is_var(self) -> bool:
        return self.symbol is None

    def __hash__(self) -> int:
        return self.id

    def __eq__(self, other) -> bool:
        return self is other

    def __reduce__(self):
        if self.is_var:
            return (Term.var, (self.index,))
        return (Term.apply, (self.symbol, self.args))

    def subterms(self) -> list[Term]:
        """All distinct subterms, children before parents."""
        out, seen, stack = [], set(), [(self, False)]
        while stack:
            t, expanded = stack.pop()
            if t.id in seen:
                continue
            if expanded:
                seen.add(t.id)
                out.append(t)
            else:
                stack.append((t, True))
                stack.extend((a, False) for a in reversed(t.args) if a.id not in seen)
        return out

    def variables(self) -> set[int]:
        return {t.index for t in self.subterms() if t.is_var}

    def show(self, variables: VariableSet | Sequence[str]) -> str:
        return format_term(self, variables)

    def __repr__(self) -> str:
        if self.is_var:
            return f"Term(x{self.index + 1})"
        return f"Term({_raw(self)})"


def _raw(t: Term) -> str:
    if t.is_var:
        return f"x{t.index + 1}"
    if not t.args:
        return t.symbol
    return f"{t.symbol}({','.join(_raw(a) for a in t.args)})"


def format_term(t: Term, variables: VariableSet | Sequence[str]) -> str:
    names = variables.names if isinstance(variables, VariableSet) else tuple(variables)
    memo: dict[int, str] = {}
    for s in t.subterms():
        if s.is_var:
            memo[s.id] = names[s.index]
        elif not s.args:
            memo[s.id] = s.symbol
        else:
            memo[s.id] = f"{s.symbol}({','.join(memo[a.id] for a in s.args)})"
    return memo[t.id]


def substitute(t: Term, mapping: Mapping[int, Term] | Sequence[Term]) -> Term:
    """Simultaneously replace variable ``i`` by ``mapping[i]``."""
    memo: dict[int, Term] = {}
    for s in t.subterms():
        if s.is_var:
            try:
                memo[s.id] = mapping[s.index]
            except (KeyError, IndexError):
                raise ValueError(f"substitution undefined on variable {s.index}") from None
        elif not s.args:
            memo[s.id] = s
        else:
            memo[s.id] = Term.apply(s.symbol, [memo[a.id] for a in s.args])
    return memo[t.id]


# ------------------------------------------------------ formulas/systems

@dataclasses.dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term

    def show(self, variables) -> str:
        return f"{format_term(self.lhs, variables)} = {format_term(self.rhs, variables)}"

    def substitute(self, mapping) -> Equation:
        return Equation(substitute(self.lhs, mapping), substitute(self.rhs, mapping))

    def terms(self) -> tuple[Term, Term]:
        return (self.lhs, self.rhs)


AtomicFormula = Equation


@dataclasses.dataclass(frozen=True)
class EquationSystem:
    equations: tuple[Equation, ...]
    variables: VariableSet
    signature: Signature
    name: str | None = dataclasses.field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(self.equations))
        n = len(self.variables)
        for eq in self.equations:
            for side in eq.terms():
                for s in side.subterms():
                    if s.is_var and s.index >= n:
                        raise ValueError(f"variable index {s.index} outside the variable set")
                    if not s.is_var and (s.symbol not in self.signature
                                         or self.signature.arity(s.symbol) != len(s.args)):
                        raise ParseError(f"symbol {s.symbol!r} not in signature with arity "
                                         f"{len(s.args)}", "arity-mismatch")

    def __len__(self) -> int:
        return len(self.equations)

    def __iter__(self) -> Iterator[Equation]:
        return iter(self.equations)

    @property
    def n(self) -> int:
        return len(self.variables)

    def duplicates(self) -> list[int]:
        """Positions of equations that repeat an earlier one."""
        seen, dup = set(), []
        for i, eq in enumerate(self.equations):
            if eq in seen:
                dup.append(i)
            seen.add(eq)
        return dup

    def with_equations(self, equations: Iterable[Equation], name: str | None = None) -> EquationSystem:
        return EquationSystem(tuple(equations), self.variables, self.signature,
                              name if name is not None else self.name)

    def show(self, name: str | None = None) -> str:
        """Render as a ``system`` block."""
        name = name or self.name or "S"
        sig = self.signature.name or "L"
        lines = [f"system {name} over {sig} vars {','.join(self.variables.names)} {{"]
        lines += [f"  {eq.show(self.variables)};" for eq in self.equations]
        lines.append("}")
        return "\n".join(lines)

    def show_inline(self) -> str:
        return " ".join(f"{eq.show(self.variables)};" for eq in self.equations)


def format_signature(sig: Signature, name: str | None = None) -> str:
    lines = [f"signature {name or sig.name or 'L'} {{"]
    for sym, arity in sig.symbols:
        lines.append(f"  const {sym};" if arity == 0 else f"  op {sym}/{arity};")
    lines.append("}")
    return "\n".join(lines)


# -------------------------------------------------------------- parsing

def _parse_signature_body(ts: TokenStream, closing: str | None) -> list[tuple[str, int]]:
    symbols: list[tuple[str, int]] = []
    seen: set[str] = set()
    while not (ts.at_eof() if closing is None else ts.at(closing)):
        kw = ts.expect_kind("ident", "'op' or 'const'")
        if kw.text not in ("op", "const"):
            raise ts.error(f"expected 'op' or 'const', found {kw.text!r}", tok=kw)
        name_tok = ts.expect_kind("ident", "symbol name")
        if kw.text == "op":
            ts.expect("/")
            ar_tok = ts.expect_kind("int", "arity")
            arity = int(ar_tok.text)
            if arity < 0:
                raise ts.error(f"negative arity {arity}", "negative-arity", ar_tok)
        else:
            arity = 0
        if name_tok.text in seen:
            raise ts.error(f"symbol {name_tok.text!r} declared twice", "duplicate-symbol", name_tok)
        seen.add(name_tok.text)
        symbols.append((name_tok.text, arity))
        ts.expect(";")
    return symbols


def parse_signature_block(ts: TokenStream) -> Signature:
    ts.expect("signature")
    name = ts.expect_kind("ident", "signature name").text
    ts.expect("{")
    symbols = _parse_signature_body(ts, "}")
    ts.expect("}")
    return Signature(tuple(symbols), name)


def parse_signature(text: str) -> Signature:
    """Parse a ``signature`` block or a bare list of ``op``/``const`` items."""
    ts = TokenStream(text)
    if ts.at("signature") and ts.peek(1).kind == "ident" and ts.peek(2).text == "{":
        sig = parse_signature_block(ts)
        if not ts.at_eof():
            raise ts.error("trailing input after signature")
        return sig
    return Signature(tuple(_parse_signature_body(ts, None)))


def _parse_term(ts: TokenStream, sig: Signature, variables: VariableSet) -> Term:
    # iterative to cope with deep terms
    stack: list[tuple[Token, list[Term]]] = []
    while True:
        tok = ts.expect_kind("ident", "term")
        name = tok.text
        if ts.at("("):
            ts.next()
            if name in variables or name not in sig:
                kind = "arity-mismatch" if name in variables else "unknown-identifier"
                raise ts.error(f"{name!r} is not a function symbol", kind, tok)
            if ts.at(")"):
                ts.next()
                result = _leaf(ts, tok, sig, variables, call=True)
            else:
                stack.append((tok, []))
                continue
        else:
            result = _leaf(ts, tok, sig, variables, call=False)
        while True:
            if not stack:
                return result
            head, args = stack[-1]
            args.append(result)
            if ts.at(","):
                ts.next()
                break
            ts.expect(")")
            stack.pop()
            arity = sig.arity(head.text)
            if arity != len(args):
                raise ts.error(f"{head.text!r} expects {arity} arguments, got {len(args)}",
                               "arity-mismatch", head)
            result = Term.apply(head.text, args)


def _leaf(ts, tok, sig, variables, call) -> Term:
    name = tok.text
    if not call and name in variables:
        return Term.var(variables.index(name))
    if name not in sig:
        raise ts.error(f"unknown identifier {name!r}", "unknown-identifier", tok)
    if sig.arity(name) != 0:
        raise ts.error(f"{name!r} expects {sig.arity(name)} arguments, got 0",
                       "arity-mismatch", tok)
    return Term.apply(name, ())


def parse_term(text: str, sig: Signature, variables: VariableSet) -> Term:
    ts = TokenStream(text)
    t = _parse_term(ts, sig, variables)
    if not ts.at_eof():
        raise ts.error(f"trailing input {ts.peek().text!r}")
    return t


def parse_equation(text: str, sig: Signature, variables: VariableSet) -> Equation:
    ts = TokenStream(text)
    eq = _parse_equation(ts, sig, variables)
    if ts.at(";"):
        ts.next()
    if not ts.at_eof():
        raise ts.error(f"trailing input {ts.peek().text!r}")
    return eq


def _parse_equation(ts, sig, variables) -> Equation:
    lhs = _parse_term(ts, sig, variables)
    ts.expect("=")
    rhs = _parse_term(ts, sig, variables)
    return Equation(lhs, rhs)


def _parse_system_body(ts, sig, variables, closing) -> list[Equation]:
    eqs = []
    while not (ts.at_eof() if closing is None else ts.at(closing)):
        eqs.append(_parse_equation(ts, sig, variables))
        if closing is None and ts.at_eof():
            break
        ts.expect(";")
    return eqs


def _check_vars_disjoint(sig: Signature, variables: VariableSet) -> None:
    clash = [v for v in variables if v in sig]
    if clash:
        raise ParseError(f"variable {clash[0]!r} clashes with a signature symbol",
                         "duplicate-symbol")


def parse_system(text: str, sig: Signature, variables: VariableSet,
                 name: str | None = None) -> EquationSystem:
    """Parse ``t = s; ...`` into a system over ``variables``."""
    _check_vars_disjoint(sig, variables)
    ts = TokenStream(text)
    eqs = _parse_system_body(ts, sig, variables, None)
    return EquationSystem(tuple(eqs), variables, sig, name)


def parse_system_block(ts: TokenStream, signatures: Mapping[str, Signature]) -> EquationSystem:
    from .errors import NameResolutionError

    ts.expect("system")
    name = ts.expect_kind("ident", "system name").text
    ts.expect("over")
    sig_tok = ts.expect_kind("ident", "signature name")
    if sig_tok.text not in signatures:
        raise NameResolutionError(f"{sig_tok.line}:{sig_tok.col}: unknown signature "
                                  f"{sig_tok.text!r}")
    sig = signatures[sig_tok.text]
    ts.expect("vars")
    toks = [ts.expect_kind("ident", "variable name")]
    while ts.at(","):
        ts.next()
        toks.append(ts.expect_kind("ident", "variable name"))
    for i, tok in enumerate(toks):
        if any(t.text == tok.text for t in toks[:i]):
            raise ts.error(f"variable {tok.text!r} listed twice", "duplicate-symbol", tok)
        if tok.text in sig:
            raise ts.error(f"variable {tok.text!r} clashes with a signature symbol",
                           "duplicate-symbol", tok)
    variables = VariableSet(tuple(t.text for t in toks))
    ts.expect("{")
    eqs = _parse_system_body(ts, sig, variables, "}")
    ts.expect("}")
    return EquationSystem(tuple(eqs), variables, sig, name)


# ------------------------------------------------------ L_A extension

def extend_with_constants(sig: Signature, algebra: FiniteAlgebra) -> tuple[Signature, FiniteAlgebra]:
    """Add a fresh constant ``c<a>`` naming each carrier element ``a``.

    Names already in use get a ``_1``, ``_2``... suffix, so applying the
    extension twice adds a second layer of constants.
    """
    from .finalg import FiniteAlgebra

    if algebra.signature != sig:
        raise ValueError("algebra does not interpret the given signature")
    names = []
    taken = set(sig.names)
    for a in range(algebra.size):
        base = cand = f"c{a}"
        k = 0
        while cand in taken:
            k += 1
            cand = f"{base}_{k}"
        taken.add(cand)
        names.append(cand)
    new_sig = sig.extended(((c, 0) for c in names),
                           name=f"{sig.name}_A" if sig.name else None)
    tables = dict(algebra.tables)
    tables.update({c: a for a, c in enumerate(names)})
    return new_sig, FiniteAlgebra(new_sig, algebra.size, tables, name=algebra.name)
