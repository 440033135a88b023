"""Ground congruence closure deciding membership in the congruent closure [S].

Variables are treated as pairwise distinct uninterpreted constants, so the
least congruent set of equations containing S, restricted to any subterm
closed universe, is what the classic union-find / signature-table closure
computes.
"""

from __future__ import annotations

from typing import Iterable

from .sigterm import EquationSystem, Term


class CongruenceTable:
    """Union-find over term ids plus a signature table for congruence."""

    def __init__(self):
        self._parent: dict[int, int] = {}
        self._rank: dict[int, int] = {}
        self._terms: dict[int, Term] = {}
        # class representative -> terms having a member of the class as an argument
        self._uses: dict[int, list[Term]] = {}
        self._sigtable: dict[tuple, Term] = {}
        self._pending: list[tuple[Term, Term]] = []
        self.sealed = False

    # union-find
    def find(self, tid: int) -> int:
        parent = self._parent
        root = tid
        while parent[root] != root:
            root = parent[root]
        while parent[tid] != root:
            parent[tid], tid = root, parent[tid]
        return root

    def _signature(self, t: Term) -> tuple:
        return (t.symbol, tuple(self.find(a.id) for a in t.args))

    def add_term(self, t: Term) -> None:
        """Insert ``t`` and its subterms into the universe."""
        if self.sealed:
            raise RuntimeError("table is sealed")
        for s in t.subterms():
            if s.id in self._parent:
                continue
            self._parent[s.id] = s.id
            self._rank[s.id] = 0
            self._terms[s.id] = s
            self._uses[s.id] = []
            if s.args:
                for a in s.args:
                    self._uses[self.find(a.id)].append(s)
                key = self._signature(s)
                other = self._sigtable.get(key)
                if other is None:
                    self._sigtable[key] = s
                else:
                    self._pending.append((s, other))
        self._propagate()

    def merge(self, t: Term, s: Term) -> None:
        self.add_term(t)
        self.add_term(s)
        self._pending.append((t, s))
        self._propagate()

    def _propagate(self) -> None:
        while self._pending:
            a, b = self._pending.pop()
            ra, rb = self.find(a.id), self.find(b.id)
            if ra == rb:
                continue
            if self._rank[ra] < self._rank[rb]:
                ra, rb = rb, ra
            # rb's users must be re-hashed after it joins ra
            moved = self._uses.pop(rb)
            for user in moved:
                self._sigtable.pop(self._signature(user), None)
            self._parent[rb] = ra
            if self._rank[ra] == self._rank[rb]:
                self._rank[ra] += 1
            for user in moved:
                key = self._signature(user)
                other = self._sigtable.get(key)
                if other is None:
                    self._sigtable[key] = user
                elif self.find(other.id) != self.find(user.id):
                    self._pending.append((user, other))
            self._uses[ra].extend(moved)

    def equivalent(self, t: Term, s: Term) -> bool:
        if not self.sealed:
            self.add_term(t)
            self.add_term(s)
        elif t.id not in self._parent or s.id not in self._parent:
            raise KeyError("term outside the sealed universe")
        return self.find(t.id) == self.find(s.id)

    def seal(self) -> CongruenceTable:
        self.sealed = True
        return self

    @property
    def universe(self) -> list[Term]:
        return sorted(self._terms.values(), key=lambda t: t.id)

    def classes(self) -> list[list[Term]]:
        groups: dict[int, list[Term]] = {}
        for t in self.universe:
            groups.setdefault(self.find(t.id), []).append(t)
        return sorted(groups.values(), key=lambda c: c[0].id)


def close(system: EquationSystem | Iterable, universe: Iterable[Term] = ()) -> CongruenceTable:
    """Congruence closure of the equations over the given term universe.

    The universe is extended with all subterms of the equations; further
    terms may be added later through :meth:`CongruenceTable.equivalent`.
    """
    table = CongruenceTable()
    for t in universe:
        table.add_term(t)
    for eq in system:
        table.merge(eq.lhs, eq.rhs)
    return table


def in_closure(t: Term, s: Term, system: EquationSystem | Iterable) -> bool:
    """Is ``t = s`` in the congruent closure of ``system``?"""
    if t is s:
        return True
    return close(system, (t, s)).equivalent(t, s)
