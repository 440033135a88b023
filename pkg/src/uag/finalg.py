"""Finite algebras given by operation tables.

Carriers are ``{0, ..., k-1}``; each symbol of arity ``r`` is a numpy array
of shape ``(k,) * r`` (a 0-d array for constants).  Subalgebras, products
and quotients are re-indexed densely and come with explicit maps back.

The work-horse is :func:`generate`, a semi-naive closure computing the
subalgebra of a direct power ``A^m`` generated by a list of tuples.  It is
used for plain subalgebras (``m = 1``), for term-function algebras and for
closure tests in the geometry layer.
"""

from __future__ import annotations

import dataclasses
import itertools
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from . import config
from .errors import CapacityError, PreconditionError
from .sigterm import Equation, EquationSystem, Signature, Term, VariableSet, format_term


def _dtype(size: int):
    if size <= 1 << 8:
        return np.uint8
    if size <= 1 << 16:
        return np.uint16
    return np.int32


class FiniteAlgebra:
    """An algebra on ``range(size)`` interpreting every symbol of ``signature``."""

    def __init__(self, signature: Signature, size: int, tables: Mapping[str, object],
                 name: str | None = None):
        if size < 1:
            raise ValueError("carrier must be non-empty")
        self.signature = signature
        self.size = int(size)
        self.name = name
        missing = [s for s in signature.names if s not in tables]
        extra = [s for s in tables if s not in signature]
        if missing or extra:
            raise ValueError(f"table mismatch: missing {missing}, unexpected {extra}")
        self.tables: dict[str, np.ndarray] = {}
        for sym, arity in signature:
            tab = np.asarray(tables[sym])
            if tab.shape != (self.size,) * arity:
                raise ValueError(f"table of {sym!r} has shape {tab.shape}, "
                                 f"expected {(self.size,) * arity}")
            if not np.issubdtype(tab.dtype, np.integer):
                raise ValueError(f"table of {sym!r} must be integer valued")
            if tab.size and (tab.min() < 0 or tab.max() >= self.size):
                raise ValueError(f"table of {sym!r} leaves the carrier")
            tab = tab.astype(_dtype(self.size), copy=True)
            tab.setflags(write=False)
            self.tables[sym] = tab
        # chunked tables built by the closure engine, keyed by (symbol, width)
        self._chunk_tables: dict = {}

    @classmethod
    def trivial(cls, signature: Signature, name: str | None = "E") -> FiniteAlgebra:
        return cls(signature, 1, {s: np.zeros((1,) * a, dtype=np.uint8) for s, a in signature},
                   name=name)

    @property
    def is_trivial(self) -> bool:
        return self.size == 1

    def apply(self, symbol: str, *args: int) -> int:
        return int(self.tables[symbol][tuple(args)])

    def constant(self, symbol: str) -> int:
        return int(self.tables[symbol][()])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteAlgebra):
            return NotImplemented
        return (self.signature == other.signature and self.size == other.size
                and all(np.array_equal(self.tables[s], other.tables[s])
                        for s in self.signature.names))

    def __hash__(self) -> int:
        try:
            return self._hash
        except AttributeError:
            self._hash = hash((self.signature, self.size,
                               tuple(self.tables[s].tobytes() for s in self.signature.names)))
            return self._hash

    def __repr__(self) -> str:
        return f"FiniteAlgebra({self.name or '?'}, size={self.size}, {list(self.signature)})"

    def show(self, name: str | None = None) -> str:
        """Render as an ``algebra`` DSL block."""
        name = name or self.name or "A"
        lines = [f"algebra {name} over {self.signature.name or 'L'} {{",
                 f"  carrier {self.size};"]
        for sym, arity in self.signature:
            tab = self.tables[sym]
            value = str(int(tab)) if arity == 0 else _nested(tab.tolist())
            lines.append(f"  {sym} = {value};")
        lines.append("}")
        return "\n".join(lines)


def _nested(obj) -> str:
    if isinstance(obj, list):
        return "[" + ",".join(_nested(x) for x in obj) + "]"
    return str(obj)


# ------------------------------------------------------------ evaluation

def all_points(algebra: FiniteAlgebra, n: int) -> np.ndarray:
    """All of ``A^n`` as an ``(k**n, n)`` array in lexicographic order."""
    total = algebra.size ** n
    config.check(f"|A|^n for n={n}", total, "max_points")
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grid = np.indices((algebra.size,) * n).reshape(n, -1).T
    return np.ascontiguousarray(grid, dtype=np.int64)


class Evaluator:
    """Evaluates terms at a batch of points, sharing work across calls."""

    def __init__(self, algebra: FiniteAlgebra, points):
        self.algebra = algebra
        self.points = np.asarray(points, dtype=np.int64)
        if self.points.ndim != 2:
            raise ValueError("points must be a 2-d array")
        self._memo: dict[int, np.ndarray] = {}

    def __call__(self, t: Term) -> np.ndarray:
        memo = self._memo
        if t.id in memo:
            return memo[t.id]
        npts = self.points.shape[0]
        for s in t.subterms():
            if s.id in memo:
                continue
            if s.is_var:
                if s.index >= self.points.shape[1]:
                    raise ValueError(f"variable x{s.index + 1} outside the point dimension")
                memo[s.id] = self.points[:, s.index]
            elif not s.args:
                memo[s.id] = np.full(npts, self.algebra.constant(s.symbol), dtype=np.int64)
            else:
                tab = self.algebra.tables[s.symbol]
                memo[s.id] = tab[tuple(memo[a.id] for a in s.args)].astype(np.int64)
        return memo[t.id]

    def holds(self, eq: Equation) -> np.ndarray:
        return self(eq.lhs) == self(eq.rhs)

    def satisfies(self, equations) -> np.ndarray:
        mask = np.ones(self.points.shape[0], dtype=bool)
        for eq in equations:
            mask &= self.holds(eq)
        return mask


def evaluate(t: Term, algebra: FiniteAlgebra, point: Sequence[int]) -> int:
    """Value of ``t`` at ``point``."""
    return int(Evaluator(algebra, [tuple(point)])(t)[0])


def holds(eq: Equation, algebra: FiniteAlgebra, point: Sequence[int]) -> bool:
    ev = Evaluator(algebra, [tuple(point)])
    return bool(ev.holds(eq)[0])


# -------------------------------------------------------------- products

def product_tuple(sizes: Sequence[int], index: int) -> tuple[int, ...]:
    """Decode a product carrier index (first factor most significant)."""
    out = []
    for k in reversed(sizes):
        index, r = divmod(index, k)
        out.append(r)
    return tuple(reversed(out))


def product_index(sizes: Sequence[int], values: Sequence[int]) -> int:
    idx = 0
    for k, v in zip(sizes, values):
        idx = idx * k + v
    return idx


def direct_product(algebras: Sequence[FiniteAlgebra], signature: Signature | None = None,
                   name: str | None = None) -> FiniteAlgebra:
    """Componentwise product; the empty product is the trivial algebra."""
    algebras = list(algebras)
    if not algebras:
        if signature is None:
            raise ValueError("empty product needs an explicit signature")
        return FiniteAlgebra.trivial(signature)
    sig = algebras[0].signature
    if any(a.signature != sig for a in algebras):
        raise ValueError("factors have different signatures")
    sizes = [a.size for a in algebras]
    total = 1
    for k in sizes:
        total *= k
    config.check("product carrier", total, "max_carrier")
    digits = np.array([product_tuple(sizes, i) for i in range(total)], dtype=np.int64) \
        if total <= 4096 else _product_digits(sizes)
    strides = np.array([int(np.prod(sizes[i + 1:], dtype=object)) for i in range(len(sizes))],
                       dtype=np.int64)
    tables = {}
    for sym, arity in sig:
        config.check(f"table of {sym!r}", total ** arity, "max_table")
        if arity == 0:
            tables[sym] = product_index(sizes, [a.constant(sym) for a in algebras])
            continue
        res = np.zeros((total,) * arity, dtype=np.int64)
        for i, a in enumerate(algebras):
            idx = tuple(digits[:, i].reshape((1,) * j + (total,) + (1,) * (arity - 1 - j))
                        for j in range(arity))
            res += a.tables[sym][idx].astype(np.int64) * strides[i]
        tables[sym] = res
    return FiniteAlgebra(sig, total, tables, name=name)


def _product_digits(sizes):
    grid = np.indices(sizes).reshape(len(sizes), -1).T
    return np.ascontiguousarray(grid, dtype=np.int64)


def direct_power(algebra: FiniteAlgebra, d: int, name: str | None = None) -> FiniteAlgebra:
    if d < 0:
        raise ValueError("exponent must be non-negative")
    return direct_product([algebra] * d, signature=algebra.signature,
                          name=name or (f"{algebra.name}^{d}" if algebra.name else None))


# ----------------------------------------------------- closure machinery

class _Keys:
    """Integer codes for rows of ``A^m``; multiword when ``k**m`` overflows."""

    def __init__(self, k: int, m: int):
        self.k, self.m = k, m
        per_word = 1
        while k ** (per_word + 1) < 2 ** 62 and per_word < max(m, 1):
            per_word += 1
        self.per_word = max(per_word, 1)
        self.words = max(1, -(-m // self.per_word))
        self.powers = [np.array([k ** j for j in range(min(self.per_word, m - w * self.per_word))],
                                dtype=np.int64) for w in range(self.words)] if m else []

    @property
    def scalar(self) -> bool:
        return self.words == 1

    def encode(self, rows: np.ndarray) -> np.ndarray:
        rows = rows.astype(np.int64, copy=False)
        if self.m == 0:
            return np.zeros(rows.shape[0], dtype=np.int64)
        if self.scalar:
            return rows @ self.powers[0]
        parts = [rows[:, w * self.per_word:(w + 1) * self.per_word] @ self.powers[w]
                 for w in range(self.words)]
        stacked = np.ascontiguousarray(np.stack(parts, axis=1))
        return stacked.view(np.dtype((np.void, 8 * self.words))).ravel()


def _hashable(code):
    return code.tobytes() if isinstance(code, np.void) else int(code)


class Closure:
    """A subalgebra of ``A^m`` together with BFS provenance.

    ``rows[i]`` is the ``i``-th element; ``provenance[i]`` is either
    ``("gen", j)`` for the ``j``-th generator or ``(symbol, args)`` with
    ``args`` indices of earlier elements.  ``generators[j]`` is the element
    index of generator ``j`` (equal generators share an element).
    ``rounds[i]`` is the BFS round in which element ``i`` appeared.
    """

    def __init__(self, base: FiniteAlgebra, rows: np.ndarray, provenance: list,
                 generators: tuple[int, ...], rounds: list[int], keys: _Keys):
        self.base = base
        self.rows = rows
        self.rows.setflags(write=False)
        self.provenance = provenance
        self.generators = generators
        self.rounds = rounds
        self._keys = keys
        codes = keys.encode(rows)
        if keys.scalar:
            self._order = np.argsort(codes, kind="stable")
            self._sorted = codes[self._order]
            self._dict = None
        else:
            self._dict = {c.tobytes(): i for i, c in enumerate(codes)}

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    @property
    def m(self) -> int:
        return self.rows.shape[1]

    def indices(self, rows) -> np.ndarray:
        """Element index of each row, ``-1`` where the row is not an element."""
        rows = np.asarray(rows, dtype=np.int64)
        if self.m == 0:
            # A^0 has a single element
            count = rows.shape[0] if rows.ndim == 2 else 1
            return np.zeros(count, dtype=np.int64) if self.size else np.full(count, -1)
        rows = rows.reshape(-1, self.m)
        codes = self._keys.encode(rows)
        if self._dict is not None:
            return np.array([self._dict.get(c.tobytes(), -1) for c in codes], dtype=np.int64)
        pos = np.searchsorted(self._sorted, codes)
        pos = np.minimum(pos, len(self._sorted) - 1)
        found = self._sorted[pos] == codes
        return np.where(found, self._order[pos], -1).astype(np.int64)

    def index(self, row) -> int | None:
        i = int(self.indices([tuple(row)])[0])
        return None if i < 0 else i

    def witnesses(self, generator_terms: Sequence[Term]) -> list[Term]:
        """A term for every element, built along the provenance."""
        out: list[Term] = []
        for prov in self.provenance:
            if prov[0] == "gen":
                out.append(generator_terms[prov[1]])
            else:
                sym, args = prov
                out.append(Term.apply(sym, [out[a] for a in args]))
        return out

    def values_along(self, generator_values: Sequence[int], target: FiniteAlgebra) -> np.ndarray:
        """Propagate generator images into ``target`` along the provenance."""
        vals = np.empty(self.size, dtype=np.int64)
        tabs = target.tables
        for i, prov in enumerate(self.provenance):
            if prov[0] == "gen":
                vals[i] = generator_values[prov[1]]
            else:
                sym, args = prov
                vals[i] = tabs[sym][tuple(int(vals[a]) for a in args)]
        return vals

    def algebra(self, name: str | None = None) -> FiniteAlgebra:
        """Materialize operation tables on the element indices."""
        n = self.size
        tables = {}
        for sym, arity in self.base.signature:
            config.check(f"table of {sym!r} on {n} elements", n ** arity, "max_table")
            tab = self.base.tables[sym]
            if arity == 0:
                row = np.full((1, self.m), int(tab), dtype=np.int64)
                tables[sym] = int(self.indices(row)[0])
                continue
            out = np.empty(n ** arity, dtype=np.int64)
            for start, args in _tuple_batches([n] * arity, self.m):
                res = tab[tuple(self.rows[a] for a in args)]
                out[start:start + len(args[0])] = self.indices(res)
            if (out < 0).any():
                raise AssertionError("closure is not closed under " + sym)
            tables[sym] = out.reshape((n,) * arity)
        return FiniteAlgebra(self.base.signature, n, tables, name=name)


def _batch_len(total: int, width: int) -> int:
    return max(1, min(total, (1 << 21) // max(width, 1)))


def _tuple_batches(ranges: Sequence[int], width: int, offsets: Sequence[int] | None = None):
    """Yield ``(flat_start, [arg arrays])`` enumerating tuples lexicographically."""
    total = 1
    for r in ranges:
        total *= r
    if total == 0:
        return
    offsets = offsets or [0] * len(ranges)
    step = _batch_len(total, width * len(ranges))
    for start in range(0, total, step):
        flat = np.arange(start, min(total, start + step), dtype=np.int64)
        args = []
        for r, off in zip(reversed(ranges), reversed(offsets)):
            flat, digit = np.divmod(flat, r)
            args.append(digit + off)
        yield start, list(reversed(args))


# powers up to this many rows get dense lookup arrays during generation
_DENSE_LIMIT = 1 << 22
# entries allowed in a chunked operation table
_CHUNK_TABLE = 1 << 16


class FunctionalConflict(Exception):
    """Raised by :func:`generate` with ``watch_last`` when the closure
    contains two rows that agree off the last column but differ on it."""


def generate(base: FiniteAlgebra, generators, limit: int | None = None,
             watch_last: bool = False) -> Closure:
    """Subalgebra of ``base^m`` generated by the rows of ``generators``.

    Elements are listed in BFS rounds, so each is derived at its least
    depth.  Inside a round elements appear in order of first discovery
    by a fixed sweep: constants (round 1 only), then each operation symbol
    in signature order, with argument tuples in lexicographic order grouped
    by the position of the first argument from the previous round.  When the
    closure fills the whole power the sweep stops there.  ``limit`` (default
    the configured ``max_closure``) bounds the number of elements.  With
    ``watch_last`` the search aborts with :class:`FunctionalConflict` as soon
    as the last column stops being a function of the others.
    """
    gens = np.asarray(generators, dtype=np.int64)
    if gens.ndim != 2:
        raise ValueError("generators must be a 2-d array (count, m)")
    m = gens.shape[1]
    if limit is None:
        limit = config.current().max_closure
    keys = _Keys(base.size, m)
    if keys.scalar and m > 0:
        return _Sweep(base, gens, limit, keys, watch_last).run()
    cl = _generate_generic(base, gens, limit, keys)
    if watch_last and m > 0 and not _last_is_function(cl.rows):
        raise FunctionalConflict()
    return cl


def extends_functionally(base: FiniteAlgebra, generators, limit: int | None = None) -> bool:
    """Is the last column of the generated subalgebra a function of the rest?"""
    try:
        generate(base, generators, limit=limit, watch_last=True)
    except FunctionalConflict:
        return False
    return True


def _last_is_function(rows: np.ndarray) -> bool:
    if len(rows) == 0:
        return True
    head = np.unique(rows[:, :-1], axis=0).shape[0]
    return head == np.unique(rows, axis=0).shape[0]


class _Sweep:
    """Closure on integer row codes, with coordinates packed into chunks.

    A row of ``A^m`` is stored as ``nc`` chunk codes of ``s`` coordinates
    each; operations act on chunks through precomputed tables, so a batch of
    argument tuples costs ``nc`` lookups instead of ``m``.
    """

    def __init__(self, base, gens, limit, keys, watch_last):
        self.base, self.gens, self.limit, self.keys = base, gens, limit, keys
        k, m = base.size, gens.shape[1]
        self.k, self.m = k, m
        self.whole = k ** m
        self.dense = self.whole <= _DENSE_LIMIT
        arities = [a for _, a in base.signature if a > 0] or [1]
        s = 1
        while s < m and k ** ((s + 1) * max(arities)) <= _CHUNK_TABLE:
            s += 1
        self.s = s
        self.widths = [min(s, m - c * s) for c in range(-(-m // s))]
        self.chunk_mult = np.array([k ** (c * s) for c in range(len(self.widths))], dtype=np.int64)
        self.tables = {sym: {w: self._chunk_table(sym, a, w) for w in set(self.widths)}
                       for sym, a in base.signature if a > 0}
        self.watch = watch_last
        self.top = k ** (m - 1)

    def _chunk_table(self, sym: str, arity: int, w: int) -> np.ndarray:
        cache = self.base._chunk_tables
        if (sym, w) not in cache:
            cache[sym, w] = self._build_chunk_table(sym, arity, w)
        return cache[sym, w]

    def _build_chunk_table(self, sym: str, arity: int, w: int) -> np.ndarray:
        k = self.k
        tab = self.base.tables[sym]
        if w == 1:
            return np.asarray(tab, dtype=np.int64)
        size = k ** w
        grid = np.indices((size,) * arity).reshape(arity, -1)
        pw = np.array([k ** t for t in range(w)], dtype=np.int64)
        digits = [(g[:, None] // pw) % k for g in grid]
        out = tab[tuple(digits)].astype(np.int64) @ pw
        return out.reshape((size,) * arity)

    def _chunks(self, codes: np.ndarray) -> np.ndarray:
        out = np.empty((len(codes), len(self.widths)), dtype=np.int64)
        rest = codes
        for c, w in enumerate(self.widths):
            rest, out[:, c] = np.divmod(rest, self.k ** w)
        return out

    def _rows(self, codes: np.ndarray) -> np.ndarray:
        out = np.empty((len(codes), self.m), dtype=_dtype(self.k))
        rest = codes
        for j in range(self.m):
            rest, out[:, j] = np.divmod(rest, self.k)
        return out

    def _check_watch(self, codes: np.ndarray) -> None:
        """Record last-column values by projection; raise on a clash."""
        val, proj = np.divmod(codes, self.top)
        if self.dense:
            order = np.argsort(proj, kind="stable")
            ps, vs = proj[order], val[order]
            if ((ps[1:] == ps[:-1]) & (vs[1:] != vs[:-1])).any():
                raise FunctionalConflict()
            old = self.proj_val[proj]
            if ((old >= 0) & (old != val)).any():
                raise FunctionalConflict()
            self.proj_val[proj] = val
            return
        for p, v in zip(proj.tolist(), val.tolist()):
            if self.proj_val.setdefault(p, v) != v:
                raise FunctionalConflict()

    def run(self) -> Closure:
        sig = self.base.signature
        codes0 = self.gens @ self.keys.powers[0]
        uniq, first = np.unique(codes0, return_index=True)
        order = np.argsort(first)
        elem = uniq[order]
        rank = np.empty(len(uniq), dtype=np.int64)
        rank[order] = np.arange(len(uniq))
        gen_index = tuple(int(x) for x in rank[np.searchsorted(uniq, codes0)])
        provenance: list = [("gen", int(first[i])) for i in order]
        rounds = [0] * len(elem)
        if len(elem) > self.limit:
            raise CapacityError(f"closure exceeds {self.limit} elements")

        if self.dense:
            self.slot = np.full(self.whole, -1, dtype=np.int64)
            self.slot[elem] = np.arange(len(elem))
        else:
            self.known = np.sort(elem)
        if self.watch:
            self.proj_val = np.full(self.top, -1, dtype=np.int64) if self.dense else {}
            self._check_watch(elem)

        codes = elem
        chunks = self._chunks(codes)
        done, rnd = 0, 0
        while len(codes) < self.whole:
            cur = len(codes)
            rnd += 1
            fresh_codes: list = []
            fresh_prov: list = []
            fresh_set: set = set()
            count = 0

            def offer(c, prov_fn):
                nonlocal count
                if self.dense:
                    c_idx = np.nonzero(self.slot[c] < 0)[0]
                else:
                    p = np.minimum(np.searchsorted(self.known, c), len(self.known) - 1)
                    c_idx = np.nonzero(self.known[p] != c)[0]
                if not len(c_idx):
                    return
                u, first = np.unique(c[c_idx], return_index=True)
                first.sort()
                sel = c_idx[first]
                new = c[sel]
                if not self.dense:
                    keep = [i for i, x in enumerate(new.tolist()) if x not in fresh_set]
                    sel, new = sel[keep], new[keep]
                    fresh_set.update(new.tolist())
                    if not len(new):
                        return
                if cur + count + len(new) > self.limit:
                    raise CapacityError(f"closure exceeds {self.limit} elements")
                if self.watch:
                    self._check_watch(new)
                if self.dense:
                    self.slot[new] = np.arange(cur + count, cur + count + len(new))
                fresh_codes.append(new)
                fresh_prov.extend(prov_fn(sel))
                count += len(new)

            if rnd == 1:
                for sym, arity in sig:
                    if arity == 0:
                        c = np.array([int(self.base.tables[sym]) * int(self.keys.powers[0].sum())],
                                     dtype=np.int64)
                        offer(c, lambda sel, sym=sym: [(sym, ())])
            for sym, arity in sig:
                if arity == 0 or cur + count == self.whole:
                    continue
                tabs = self.tables[sym]
                for first_new in range(arity):
                    if cur + count == self.whole:
                        break
                    ranges = [done] * first_new + [cur - done] + [cur] * (arity - first_new - 1)
                    offsets = [0] * first_new + [done] + [0] * (arity - first_new - 1)
                    for _, args in _tuple_batches(ranges, len(self.widths), offsets):
                        c = np.zeros(len(args[0]), dtype=np.int64)
                        for ci, w in enumerate(self.widths):
                            part = tabs[w][tuple(chunks[a, ci] for a in args)]
                            c += part * self.chunk_mult[ci]

                        def prov(sel, sym=sym, args=args):
                            cols = [a[sel].tolist() for a in args]
                            return [(sym, t) for t in zip(*cols)]

                        offer(c, prov)
                        if cur + count == self.whole:
                            break
            done = cur
            if not count:
                break
            new = np.concatenate(fresh_codes)
            provenance.extend(fresh_prov)
            rounds.extend([rnd] * count)
            codes = np.concatenate([codes, new])
            chunks = np.concatenate([chunks, self._chunks(new)])
            if not self.dense:
                self.known = np.sort(codes)
        return Closure(self.base, self._rows(codes), provenance, gen_index, rounds, self.keys)


def _generate_generic(base: FiniteAlgebra, gens: np.ndarray, limit: int, keys: _Keys) -> Closure:
    """Dictionary-based closure for multiword keys (same order as the sweep)."""
    m = gens.shape[1]
    sig = base.signature
    whole = base.size ** m if m <= 64 else -1

    rows: list[np.ndarray] = []
    provenance: list = []
    rounds: list[int] = []
    index: dict = {}
    gen_index = []
    for j, g in enumerate(gens):
        code = _hashable(keys.encode(g[None, :])[0])
        if code not in index:
            index[code] = len(rows)
            rows.append(g)
            provenance.append(("gen", j))
            rounds.append(0)
        gen_index.append(index[code])
    if len(rows) > limit:
        raise CapacityError(f"closure exceeds {limit} elements")

    done, rnd = 0, 0
    while len(rows) != whole:
        cur = len(rows)
        rnd += 1
        all_rows = np.array(rows, dtype=np.int64).reshape(cur, m)

        def add(code, row, prov):
            if code in index:
                return
            if len(rows) + 1 > limit:
                raise CapacityError(f"closure exceeds {limit} elements")
            index[code] = len(rows)
            rows.append(row)
            provenance.append(prov)
            rounds.append(rnd)

        for sym, arity in sig:
            if arity == 0 and rnd == 1:
                row = np.full(m, int(base.tables[sym]), dtype=np.int64)
                add(_hashable(keys.encode(row[None, :])[0]), row, (sym, ()))
        for sym, arity in sig:
            if arity == 0 or len(rows) == whole:
                continue
            tab = base.tables[sym]
            for first_new in range(arity):
                ranges = [done] * first_new + [cur - done] + [cur] * (arity - first_new - 1)
                offsets = [0] * first_new + [done] + [0] * (arity - first_new - 1)
                for _, args in _tuple_batches(ranges, m, offsets):
                    res = tab[tuple(all_rows[a] for a in args)].astype(np.int64)
                    codes = keys.encode(res)
                    for f, code in enumerate(codes):
                        add(_hashable(code), res[f], (sym, tuple(int(a[f]) for a in args)))
                        if len(rows) == whole:
                            break
                    if len(rows) == whole:
                        break
                if len(rows) == whole:
                    break
        done = cur
        if len(rows) == cur:
            break
    arr = np.array(rows, dtype=np.int64).reshape(len(rows), m)
    return Closure(base, arr.astype(_dtype(base.size)), provenance, tuple(gen_index), rounds, keys)


# ----------------------------------------------------------- subalgebras

@dataclasses.dataclass(frozen=True)
class Subalgebra:
    algebra: FiniteAlgebra
    inclusion: tuple[int, ...]  # sub index -> parent element
    provenance: tuple
    closure: Closure = dataclasses.field(repr=False, compare=False)

    @property
    def elements(self) -> tuple[int, ...]:
        return self.inclusion


def subalgebra_generated(algebra: FiniteAlgebra, seed: Sequence[int]) -> Subalgebra:
    """Least subset containing ``seed`` (and all constants) closed under the tables."""
    seed = list(dict.fromkeys(int(s) for s in seed))
    if any(not 0 <= s < algebra.size for s in seed):
        raise ValueError("seed element outside the carrier")
    cl = generate(algebra, np.array(seed, dtype=np.int64).reshape(-1, 1))
    sub = cl.algebra(name=f"Sg({algebra.name})" if algebra.name else None)
    return Subalgebra(sub, tuple(int(r[0]) for r in cl.rows), tuple(cl.provenance), cl)


def generating_set(algebra: FiniteAlgebra) -> tuple[int, ...]:
    """Greedy generating set: scan elements upward, keep those not yet generated."""
    gens: list[int] = []
    covered = np.zeros(algebra.size, dtype=bool)
    cl = generate(algebra, np.zeros((0, 1), dtype=np.int64))
    covered[cl.rows[:, 0]] = True
    for a in range(algebra.size):
        if not covered[a]:
            gens.append(a)
            cl = generate(algebra, np.array(gens, dtype=np.int64).reshape(-1, 1))
            covered[cl.rows[:, 0]] = True
    return tuple(gens)


# ---------------------------------------------------------- homomorphisms

def _respects(src_tab: np.ndarray, tgt_tab: np.ndarray, h: np.ndarray) -> bool:
    """Check ``h(f(a..)) == f(h(a)..)`` over all argument tuples."""
    arity = src_tab.ndim
    if arity == 0:
        return int(h[int(src_tab)]) == int(tgt_tab)
    k = src_tab.shape[0]
    step = max(1, (1 << 22) // max(1, k ** (arity - 1)))
    for lo in range(0, k, step):
        lhs = h[src_tab[lo:lo + step].astype(np.int64)]
        idx = [h[lo:lo + step].reshape((-1,) + (1,) * (arity - 1))]
        idx += [h.reshape((1,) * j + (k,) + (1,) * (arity - 1 - j)) for j in range(1, arity)]
        if not np.array_equal(lhs, tgt_tab[tuple(idx)]):
            return False
    return True


def respects_operations(source: FiniteAlgebra, target: FiniteAlgebra, mapping) -> bool:
    h = np.asarray(mapping, dtype=np.int64)
    if h.shape != (source.size,) or (h.size and (h.min() < 0 or h.max() >= target.size)):
        return False
    return all(_respects(source.tables[s], target.tables[s], h) for s in source.signature.names)


@dataclasses.dataclass(frozen=True)
class Homomorphism:
    source: FiniteAlgebra
    target: FiniteAlgebra
    mapping: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(int(x) for x in self.mapping))
        if self.source.signature != self.target.signature:
            raise ValueError("source and target have different signatures")
        if not respects_operations(self.source, self.target, self.mapping):
            raise ValueError("map does not respect the operations")

    @classmethod
    def _trusted(cls, source, target, mapping) -> Homomorphism:
        h = object.__new__(cls)
        object.__setattr__(h, "source", source)
        object.__setattr__(h, "target", target)
        object.__setattr__(h, "mapping", tuple(int(x) for x in mapping))
        return h

    def __call__(self, a: int) -> int:
        return self.mapping[a]

    def __hash__(self) -> int:
        return hash(self.mapping)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Homomorphism):
            return NotImplemented
        return (self.mapping == other.mapping
                and (self.source is other.source or self.source == other.source)
                and (self.target is other.target or self.target == other.target))

    def compose(self, after: Homomorphism) -> Homomorphism:
        """``after ∘ self``."""
        return Homomorphism._trusted(self.source, after.target,
                                     [after.mapping[a] for a in self.mapping])

    @property
    def is_injective(self) -> bool:
        return len(set(self.mapping)) == len(self.mapping)

    @property
    def is_surjective(self) -> bool:
        return len(set(self.mapping)) == self.target.size

    def kernel(self) -> Partition:
        return Partition(self.mapping)


def identity(algebra: FiniteAlgebra) -> Homomorphism:
    return Homomorphism._trusted(algebra, algebra, range(algebra.size))


def enumerate_homomorphisms(source: FiniteAlgebra, target: FiniteAlgebra,
                            fixed: Mapping[int, int] | None = None,
                            generators: Sequence[int] | None = None) -> Iterator[Homomorphism]:
    """All homomorphisms ``source -> target`` honouring ``fixed`` images.

    Backtracks over generator images in ascending order; after each choice
    the part of the source generated so far is checked against the tables.
    Output is in lexicographic order of generator images.
    """
    if source.signature != target.signature:
        raise ValueError("different signatures")
    fixed = dict(fixed or {})
    gens = tuple(generators) if generators is not None else generating_set(source)
    # a repeated generator is one element, not a second free choice
    gens = tuple(dict.fromkeys(int(g) for g in gens))
    cl = generate(source, np.array(gens, dtype=np.int64).reshape(-1, 1),
                  limit=max(source.size, 1))
    if cl.size != source.size:
        raise PreconditionError("the given generators do not generate the source algebra")
    elem = cl.rows[:, 0].astype(np.int64)  # closure index -> source element
    # support: highest generator position an element's derivation depends on
    support = np.full(cl.size, -1, dtype=np.int64)
    for i, prov in enumerate(cl.provenance):
        if prov[0] == "gen":
            support[i] = prov[1]
        else:
            support[i] = max((support[a] for a in prov[1]), default=-1)
    by_source = np.empty(source.size, dtype=np.int64)
    by_source[elem] = np.arange(cl.size)
    sup_src = support[by_source]
    ngen = len(gens)
    tabs = [(source.tables[s], target.tables[s]) for s in source.signature.names]

    def consistent(h: np.ndarray, level: int) -> bool:
        mask = sup_src < level
        for c, a in fixed.items():
            if mask[c] and h[c] != a:
                return False
        if level == ngen:
            return all(_respects(st, tt, h) for st, tt in tabs)
        return all(_partial_ok(st, tt, h, mask) for st, tt in tabs)

    images = [0] * ngen

    def values() -> np.ndarray:
        vals = cl.values_along(images, target)
        h = np.empty(source.size, dtype=np.int64)
        h[elem] = vals
        return h

    def rec(level: int):
        if level == ngen:
            h = values()
            if consistent(h, ngen):
                yield Homomorphism._trusted(source, target, h)
            return
        for a in range(target.size):
            images[level] = a
            if level + 1 < ngen:
                # provisional zeros for later generators are masked out
                for j in range(level + 1, ngen):
                    images[j] = 0
                if not consistent(values(), level + 1):
                    continue
            yield from rec(level + 1)

    yield from rec(0)


def _partial_ok(src_tab, tgt_tab, h, mask) -> bool:
    arity = src_tab.ndim
    if arity == 0:
        c = int(src_tab)
        return not mask[c] or int(h[c]) == int(tgt_tab)
    sel = [np.flatnonzero(mask)] * arity
    if any(len(s) == 0 for s in sel):
        return True
    sub = src_tab[np.ix_(*sel)].astype(np.int64)
    defined = mask[sub]
    lhs = h[sub]
    rhs = tgt_tab[np.ix_(*[h[s] for s in sel])]
    return bool(np.all((lhs == rhs) | ~defined))


def hom_count(source: FiniteAlgebra, target: FiniteAlgebra) -> int:
    return sum(1 for _ in enumerate_homomorphisms(source, target))


class SeparationResult(NamedTuple):
    separated: bool
    witness: tuple[int, int] | None
    family: tuple[Homomorphism, ...]


def is_separated(c: FiniteAlgebra, a: FiniteAlgebra) -> SeparationResult:
    """Does every pair of distinct elements of ``c`` get split by some ``c -> a``?

    On success ``family`` is a separating family picked greedily in
    enumeration order; on failure ``witness`` is the lexicographically first
    pair no homomorphism splits.
    """
    homs = list(enumerate_homomorphisms(c, a))
    split = np.zeros((c.size, c.size), dtype=bool)
    family = []
    for h in homs:
        m = np.asarray(h.mapping)
        new = (m[:, None] != m[None, :]) & ~split
        if new.any():
            family.append(h)
            split |= new
    for i in range(c.size):
        for j in range(i + 1, c.size):
            if not split[i, j]:
                return SeparationResult(False, (i, j), tuple(family))
    return SeparationResult(True, None, tuple(family))


class DiscriminationResult(NamedTuple):
    discriminated: bool
    embedding: Homomorphism | None


def is_discriminated(c: FiniteAlgebra, a: FiniteAlgebra) -> DiscriminationResult:
    """For finite ``c`` discrimination is the same as embeddability."""
    if c.size <= a.size:
        for h in enumerate_homomorphisms(c, a):
            if h.is_injective:
                return DiscriminationResult(True, h)
    return DiscriminationResult(False, None)


def find_embedding(c: FiniteAlgebra, a: FiniteAlgebra) -> Homomorphism | None:
    return is_discriminated(c, a).embedding


def isomorphic(c: FiniteAlgebra, d: FiniteAlgebra) -> Homomorphism | None:
    """An isomorphism found by embedding both ways, or ``None``."""
    if c.size != d.size:
        return None
    there = find_embedding(c, d)
    if there is None or find_embedding(d, c) is None:
        return None
    return there


def separating_embedding(c: FiniteAlgebra, a: FiniteAlgebra,
                         family: Sequence[Homomorphism]) -> tuple[FiniteAlgebra, Homomorphism] | None:
    """Assemble ``c -> a^d`` from a family of homomorphisms; ``None`` if not injective."""
    power = direct_power(a, len(family))
    sizes = [a.size] * len(family)
    mapping = [product_index(sizes, [h.mapping[x] for h in family]) for x in range(c.size)]
    emb = Homomorphism(c, power, mapping)
    return (power, emb) if emb.is_injective else None


# --------------------------------------------------- congruences/quotients

class Partition:
    """A partition of ``range(k)`` stored as normalized class labels."""

    def __init__(self, labels: Sequence[int]):
        relabel: dict[int, int] = {}
        self.labels = tuple(relabel.setdefault(int(x), len(relabel)) for x in labels)

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]], size: int | None = None) -> Partition:
        size = size if size is not None else sum(len(b) for b in blocks)
        labels = [-1] * size
        for i, block in enumerate(blocks):
            for x in block:
                if labels[x] != -1:
                    raise ValueError(f"element {x} occurs in two blocks")
                labels[x] = i
        if -1 in labels:
            raise ValueError("blocks do not cover the carrier")
        return cls(labels)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def count(self) -> int:
        return max(self.labels, default=-1) + 1

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.count)]
        for x, l in enumerate(self.labels):
            out[l].append(x)
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and self.labels == other.labels

    def __hash__(self) -> int:
        return hash(self.labels)

    def __repr__(self) -> str:
        return f"Partition({self.blocks()})"


Congruence = Partition


def is_congruence(algebra: FiniteAlgebra, theta: Partition) -> bool:
    lab = np.asarray(theta.labels, dtype=np.int64)
    reps = np.array([b[0] for b in theta.blocks()], dtype=np.int64)
    for sym, arity in algebra.signature:
        if arity == 0:
            continue
        tab = algebra.tables[sym].astype(np.int64)
        qtab = lab[tab[np.ix_(*[reps] * arity)]]
        if not np.array_equal(lab[tab], qtab[np.ix_(*[lab] * arity)]):
            return False
    return True


def quotient(algebra: FiniteAlgebra, theta: Partition) -> tuple[FiniteAlgebra, Homomorphism]:
    if theta.size != algebra.size:
        raise ValueError("partition size does not match the carrier")
    if not is_congruence(algebra, theta):
        raise PreconditionError("partition is not compatible with the operations")
    lab = np.asarray(theta.labels, dtype=np.int64)
    reps = np.array([b[0] for b in theta.blocks()], dtype=np.int64)
    tables = {}
    for sym, arity in algebra.signature:
        tab = algebra.tables[sym].astype(np.int64)
        tables[sym] = int(lab[int(tab)]) if arity == 0 else lab[tab[np.ix_(*[reps] * arity)]]
    q = FiniteAlgebra(algebra.signature, theta.count, tables,
                      name=f"{algebra.name}/θ" if algebra.name else None)
    return q, Homomorphism(algebra, q, lab)


def has_trivial_subalgebra(algebra: FiniteAlgebra) -> int | None:
    """Smallest ``e`` with ``f(e,...,e) = e`` for every symbol, if any."""
    for e in range(algebra.size):
        if all(int(tab[(e,) * tab.ndim]) == e for tab in algebra.tables.values()):
            return e
    return None


# ---------------------------------------------------------- logic checks

@dataclasses.dataclass(frozen=True)
class QuasiIdentity:
    premises: EquationSystem
    conclusion: Equation

    @property
    def variables(self) -> VariableSet:
        return self.premises.variables

    def show(self) -> str:
        vs = self.variables
        head = "forall " + ",".join(vs.names) + ". "
        prem = " & ".join(eq.show(vs) for eq in self.premises) or "true"
        return f"{head}({prem} -> {self.conclusion.show(vs)})"


def check_quasi_identity(algebra: FiniteAlgebra, premises: EquationSystem,
                         conclusion: Equation) -> tuple[bool, tuple[int, ...] | None]:
    """Brute force over ``A^n``; returns the first counterexample if any."""
    pts = all_points(algebra, premises.n)
    ev = Evaluator(algebra, pts)
    bad = ev.satisfies(premises) & ~ev.holds(conclusion)
    hits = np.flatnonzero(bad)
    if len(hits):
        return False, tuple(int(x) for x in pts[hits[0]])
    return True, None


def holds_quasi_identity(algebra: FiniteAlgebra, qi: QuasiIdentity) -> bool:
    return check_quasi_identity(algebra, qi.premises, qi.conclusion)[0]


def check_universal_disequation(algebra: FiniteAlgebra, clauses: EquationSystem) -> bool:
    """Does ``forall x. OR (t != s)`` over the clauses hold in ``algebra``?"""
    pts = all_points(algebra, clauses.n)
    return not Evaluator(algebra, pts).satisfies(clauses).any()


# ------------------------------------------------------------ presentations

def fresh_variables(signature: Signature, count: int, stem: str = "y") -> VariableSet:
    names = []
    i = 1
    while len(names) < count:
        cand = f"{stem}{i}"
        if cand not in signature:
            names.append(cand)
        i += 1
    return VariableSet(tuple(names))


@dataclasses.dataclass(frozen=True)
class Presentation:
    """``algebra ≅ T(X)/θ_S`` with ``X`` the generators, ``S`` the relations."""

    algebra: FiniteAlgebra
    generators: tuple[int, ...]
    relations: EquationSystem
    words: tuple[Term, ...]  # a term for every element

    def word(self, element: int) -> Term:
        return self.words[element]


def presentation(algebra: FiniteAlgebra, generators: Sequence[int] | None = None) -> Presentation:
    """Multiplication-table presentation over the given generators.

    Relations are ``f(w(a1),...,w(ar)) = w(f(a1,...,ar))`` for every symbol
    and argument tuple, skipping syntactically trivial ones, plus
    ``y_i = y_j`` when two generators coincide.
    """
    gens = tuple(generators) if generators is not None else generating_set(algebra)
    if not gens and algebra.size > 1 and not algebra.signature.constants:
        raise PreconditionError("no generators")
    nvars = max(len(gens), 1)
    variables = fresh_variables(algebra.signature, nvars)
    cl = generate(algebra, np.array(gens, dtype=np.int64).reshape(-1, 1),
                  limit=algebra.size)
    if cl.size != algebra.size:
        raise PreconditionError("the given generators do not generate the algebra")
    wit = cl.witnesses([Term.var(j) for j in range(len(gens))])
    words: list[Term | None] = [None] * algebra.size
    for i, row in enumerate(cl.rows):
        words[int(row[0])] = wit[i]
    rels: list[Equation] = []
    for j, g in enumerate(gens):
        if words[g] is not Term.var(j):
            rels.append(Equation(Term.var(j), words[g]))
    for sym, arity in algebra.signature:
        tab = algebra.tables[sym]
        for args in itertools.product(range(algebra.size), repeat=arity):
            lhs = Term.apply(sym, [words[a] for a in args])
            rhs = words[int(tab[args])]
            if lhs is not rhs:
                rels.append(Equation(lhs, rhs))
    system = EquationSystem(tuple(rels), variables, algebra.signature,
                            name=f"pres_{algebra.name}" if algebra.name else "pres")
    return Presentation(algebra, gens, system, tuple(words))


def show_element_words(p: Presentation) -> list[str]:
    return [format_term(w, p.relations.variables) for w in p.words]
