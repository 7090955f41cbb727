"""Atoms, permutations, and finitely-represented infinite atom sets.

Atoms of a name sort are indexed by integers: negative indices form the
"below" half of the sort (written ``A<`` in the concrete syntax), indices
``>= 0`` the "above" half.  Permutations are the group generated by
swappings together with, per sort, the shift bijection that adds one to
every index.  Every group element has a unique normal form

    ``finite_part . (product over sorts of shift^k)``

with the finite part applied last; two values denote the same bijection
exactly when their stored fields are equal.

Atom sets carry, per sort, either a finite extension or a finite
symmetric difference against the below half.  That class is closed under
permutation images, finite unions, and finite additions/removals, and it
contains every permission set (below-cofinite in all sorts).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Optional


@dataclass(frozen=True, order=True)
class NameSort:
    """A sort of atoms.  Distinct ids denote disjoint atom families."""

    id: str

    def __repr__(self):
        return f"NameSort({self.id!r})"


@dataclass(frozen=True, order=True)
class Atom:
    sort: NameSort
    index: int

    def is_below(self) -> bool:
        return self.index < 0

    def __repr__(self):
        return f"{self.sort.id}#{self.index}"


class PermError(Exception):
    """Raised for ill-formed permutation constructions."""


def _check_graph(graph: dict[Atom, Atom]) -> None:
    for a, b in graph.items():
        if a.sort != b.sort:
            raise PermError(f"sort-changing entry {a} -> {b}")
    values = list(graph.values())
    if len(set(values)) != len(values):
        raise PermError("finite part is not injective")
    if set(values) != set(graph):
        raise PermError("finite part is not a bijection on its domain")


@dataclass(frozen=True)
class Perm:
    """A permutation in normal form: finite part composed after shifts.

    ``graph`` stores the non-identity pairs of the finite part; ``shifts``
    stores the nonzero shift exponent of each sort.  The denoted bijection
    sends ``a`` to ``graph[shift^k(a)]``.
    """

    graph: tuple[tuple[Atom, Atom], ...] = ()
    shifts: tuple[tuple[NameSort, int], ...] = ()

    @staticmethod
    def make(graph: dict[Atom, Atom], shifts: dict[NameSort, int]) -> "Perm":
        graph = {a: b for a, b in graph.items() if a != b}
        _check_graph(graph)
        shifts = {s: k for s, k in shifts.items() if k != 0}
        return Perm(
            graph=tuple(sorted(graph.items())),
            shifts=tuple(sorted(shifts.items())),
        )

    @staticmethod
    def identity() -> "Perm":
        return Perm()

    @staticmethod
    def swap(a: Atom, b: Atom) -> "Perm":
        if a.sort != b.sort:
            raise PermError(f"cannot swap atoms of different sorts: {a}, {b}")
        if a == b:
            return Perm()
        return Perm.make({a: b, b: a}, {})

    @staticmethod
    def shift(sort: NameSort, power: int = 1) -> "Perm":
        return Perm.make({}, {sort: power})

    def graph_map(self) -> dict[Atom, Atom]:
        return dict(self.graph)

    def shift_map(self) -> dict[NameSort, int]:
        return dict(self.shifts)

    def is_identity(self) -> bool:
        return not self.graph and not self.shifts

    def is_finite(self) -> bool:
        """True when generated by swappings alone (no net shift)."""
        return not self.shifts

    def apply(self, a: Atom) -> Atom:
        k = dict(self.shifts).get(a.sort, 0)
        shifted = Atom(a.sort, a.index + k) if k else a
        return dict(self.graph).get(shifted, shifted)

    def sorts(self) -> set[NameSort]:
        out = {s for s, _ in self.shifts}
        out.update(a.sort for a, _ in self.graph)
        return out

    def support_bound(self) -> int:
        """An index magnitude beyond which only shifts act."""
        bound = 0
        for a, b in self.graph:
            bound = max(bound, abs(a.index), abs(b.index))
        for _, k in self.shifts:
            bound = max(bound, abs(k))
        return bound

    def __repr__(self):
        return perm_str(self)


def _conjugate_by_shifts(graph: dict[Atom, Atom], shifts: dict[NameSort, int]) -> dict[Atom, Atom]:
    # shift^k . sigma . shift^-k re-indexes the graph of sigma by +k.
    out = {}
    for a, b in graph.items():
        k = shifts.get(a.sort, 0)
        out[Atom(a.sort, a.index + k)] = Atom(b.sort, b.index + k)
    return out


def perm_compose(p1: Perm, p2: Perm) -> Perm:
    """The permutation acting as ``p1`` after ``p2``."""
    s1, s2 = p1.graph_map(), p2.graph_map()
    k1, k2 = p1.shift_map(), p2.shift_map()
    # s1 t1 s2 t2 = (s1 . (t1 s2 t1^-1)) t1 t2
    s2c = _conjugate_by_shifts(s2, k1)
    graph = {}
    for a in set(s1) | set(s2c):
        b = s2c.get(a, a)
        graph[a] = s1.get(b, b)
    shifts = {s: k1.get(s, 0) + k2.get(s, 0) for s in set(k1) | set(k2)}
    return Perm.make(graph, shifts)


def perm_inverse(p: Perm) -> Perm:
    inv_graph = {b: a for a, b in p.graph}
    neg = {s: -k for s, k in p.shifts}
    return Perm.make(_conjugate_by_shifts(inv_graph, neg), neg)


def perm_apply(p: Perm, a: Atom) -> Atom:
    return p.apply(a)


class SetMode(Enum):
    FIN = "fin"
    COFIN_BELOW = "cofin_below"


@dataclass(frozen=True)
class _SortSet:
    mode: SetMode
    exceptions: frozenset[Atom]

    def member(self, a: Atom) -> bool:
        if self.mode is SetMode.FIN:
            return a in self.exceptions
        return a.is_below() != (a in self.exceptions)

    def is_empty(self) -> bool:
        return self.mode is SetMode.FIN and not self.exceptions


def _norm_sort_set(mode: SetMode, exceptions: Iterable[Atom], sort: NameSort) -> _SortSet:
    exc = frozenset(exceptions)
    for a in exc:
        if a.sort != sort:
            raise ValueError(f"atom {a} listed under sort {sort.id}")
    return _SortSet(mode, exc)


@dataclass(frozen=True)
class AtomSet:
    """Per-sort finite or below-cofinite atom set.

    Sorts not listed contribute no atoms.  A value is a permission set
    when every listed sort is in ``COFIN_BELOW`` mode and the value was
    built over the full sort list of the ambient signature.
    """

    parts: tuple[tuple[NameSort, _SortSet], ...] = ()

    @staticmethod
    def make(parts: dict[NameSort, _SortSet]) -> "AtomSet":
        clean = {
            s: p for s, p in parts.items()
            if not (p.mode is SetMode.FIN and not p.exceptions)
        }
        return AtomSet(tuple(sorted(clean.items(), key=lambda kv: kv[0])))

    @staticmethod
    def empty() -> "AtomSet":
        return AtomSet()

    @staticmethod
    def finite(atoms: Iterable[Atom]) -> "AtomSet":
        by_sort: dict[NameSort, set[Atom]] = {}
        for a in atoms:
            by_sort.setdefault(a.sort, set()).add(a)
        return AtomSet.make({
            s: _norm_sort_set(SetMode.FIN, acc, s) for s, acc in by_sort.items()
        })

    @staticmethod
    def below(sorts: Iterable[NameSort], exceptions: Iterable[Atom] = ()) -> "AtomSet":
        """The set ``A< symmetric-difference exceptions`` over the given sorts."""
        sorts = list(sorts)
        by_sort: dict[NameSort, set[Atom]] = {s: set() for s in sorts}
        for a in exceptions:
            if a.sort not in by_sort:
                raise ValueError(f"exception {a} outside listed sorts")
            by_sort[a.sort].add(a)
        return AtomSet.make({
            s: _norm_sort_set(SetMode.COFIN_BELOW, acc, s) for s, acc in by_sort.items()
        })

    def part(self, sort: NameSort) -> _SortSet:
        for s, p in self.parts:
            if s == sort:
                return p
        return _SortSet(SetMode.FIN, frozenset())

    def part_map(self) -> dict[NameSort, _SortSet]:
        return dict(self.parts)

    def sorts(self) -> list[NameSort]:
        return [s for s, _ in self.parts]

    def is_permission_set(self) -> bool:
        return bool(self.parts) and all(
            p.mode is SetMode.COFIN_BELOW for _, p in self.parts
        )

    def is_finite(self) -> bool:
        return all(p.mode is SetMode.FIN for _, p in self.parts)

    def finite_atoms(self) -> set[Atom]:
        """All members, for finite sets only."""
        if not self.is_finite():
            raise ValueError("atom set is infinite")
        out: set[Atom] = set()
        for _, p in self.parts:
            out |= p.exceptions
        return out

    def exception_atoms(self) -> set[Atom]:
        out: set[Atom] = set()
        for _, p in self.parts:
            out |= p.exceptions
        return out

    def member(self, a: Atom) -> bool:
        return self.part(a.sort).member(a)

    def index_bound(self) -> int:
        bound = 0
        for _, p in self.parts:
            for a in p.exceptions:
                bound = max(bound, abs(a.index))
        return bound

    def __repr__(self):
        return set_str(self)


def set_member(s: AtomSet, a: Atom) -> bool:
    return s.member(a)


def set_apply_perm(p: Perm, s: AtomSet) -> AtomSet:
    """The pointwise image ``{p(a) | a in s}``; modes are preserved."""
    out: dict[NameSort, _SortSet] = {}
    for sort, part in s.parts:
        if part.mode is SetMode.FIN:
            out[sort] = _SortSet(SetMode.FIN, frozenset(p.apply(a) for a in part.exceptions))
            continue
        # Image of the below half: every atom whose membership in the image
        # differs from plain below-ness is an exception.  Only finitely many
        # candidates exist: images of current exceptions, the shift band, and
        # atoms touched by the finite part.
        k = p.shift_map().get(sort, 0)
        candidates: set[Atom] = set()
        for a in part.exceptions:
            candidates.add(p.apply(a))
        for i in range(0, abs(k)):
            candidates.add(Atom(sort, i if k > 0 else -1 - i))
        for a, b in p.graph:
            if a.sort == sort:
                candidates.add(a)
                candidates.add(b)
        inv = perm_inverse(p)
        exc = frozenset(
            c for c in candidates if part.member(inv.apply(c)) != c.is_below()
        )
        out[sort] = _SortSet(SetMode.COFIN_BELOW, exc)
    return AtomSet.make(out)


def _union_parts(p1: _SortSet, p2: _SortSet) -> _SortSet:
    if p1.mode is SetMode.FIN and p2.mode is SetMode.FIN:
        return _SortSet(SetMode.FIN, p1.exceptions | p2.exceptions)
    # Below-cofinite absorbs: exceptions are below-holes present in both
    # minus rescues, plus above-extras of either.
    candidates = p1.exceptions | p2.exceptions
    exc = frozenset(
        a for a in candidates if (p1.member(a) or p2.member(a)) != a.is_below()
    )
    return _SortSet(SetMode.COFIN_BELOW, exc)


def set_union(s1: AtomSet, s2: AtomSet) -> AtomSet:
    out: dict[NameSort, _SortSet] = s1.part_map()
    for sort, part in s2.parts:
        if sort in out:
            out[sort] = _union_parts(out[sort], part)
        else:
            out[sort] = part
    return AtomSet.make(out)


def set_remove(s: AtomSet, atoms: Iterable[Atom]) -> AtomSet:
    out = s.part_map()
    for a in atoms:
        part = out.get(a.sort, _SortSet(SetMode.FIN, frozenset()))
        if not part.member(a):
            continue
        if part.mode is SetMode.FIN:
            out[a.sort] = _SortSet(SetMode.FIN, part.exceptions - {a})
        else:
            out[a.sort] = _SortSet(SetMode.COFIN_BELOW, part.exceptions ^ {a})
    return AtomSet.make(out)


def set_add(s: AtomSet, atoms: Iterable[Atom]) -> AtomSet:
    out = s.part_map()
    for a in atoms:
        part = out.get(a.sort, _SortSet(SetMode.FIN, frozenset()))
        if part.member(a):
            continue
        if part.mode is SetMode.FIN:
            out[a.sort] = _SortSet(SetMode.FIN, part.exceptions | {a})
        else:
            out[a.sort] = _SortSet(SetMode.COFIN_BELOW, part.exceptions ^ {a})
    return AtomSet.make(out)


def set_subset(s1: AtomSet, s2: AtomSet) -> bool:
    for sort, p1 in s1.parts:
        p2 = s2.part(sort)
        if p1.mode is SetMode.FIN:
            if not all(p2.member(a) for a in p1.exceptions):
                return False
        else:
            if p2.mode is SetMode.FIN:
                return False  # infinite part cannot fit a finite one
            # Every hole of s2 below must be a hole of s1; every extra of s1
            # above must be an extra of s2.
            for a in p2.exceptions:
                if a.is_below() and p1.member(a):
                    return False
            for a in p1.exceptions:
                if not a.is_below() and not p2.member(a):
                    return False
    return True


def set_equal(s1: AtomSet, s2: AtomSet) -> bool:
    return s1.parts == s2.parts


def perm_agrees_on(p1: Perm, p2: Perm, s: AtomSet) -> bool:
    """Decide whether ``p1`` and ``p2`` act identically on all of ``s``."""
    return find_disagreement(p1, p2, s) is None


def find_disagreement(p1: Perm, p2: Perm, s: AtomSet) -> Optional[Atom]:
    """An atom of ``s`` moved differently by ``p1`` and ``p2``, if any.

    The residual ``p2^-1 . p1`` fixes an infinite set only if its shift
    exponent there is zero, so below-cofinite sorts are decided by the
    residual's finite data; finite sorts are checked pointwise.
    """
    residual = perm_compose(perm_inverse(p2), p1)
    shifts = residual.shift_map()
    for sort, part in s.parts:
        if part.mode is SetMode.FIN:
            for a in sorted(part.exceptions):
                if residual.apply(a) != a:
                    return a
            continue
        k = shifts.get(sort, 0)
        if k != 0:
            # A member below all finite data, chosen deep enough that its
            # shift image also escapes the residual's finite part.
            low = -(2 * residual.support_bound() + s.index_bound() + 1)
            return Atom(sort, low)
        for a, b in residual.graph:
            if a.sort == sort and a != b and part.member(a):
                return a
    return None


class FreshnessError(Exception):
    """Raised when no fresh atom exists on the requested side."""


def fresh_atom(sort: NameSort, avoid: AtomSet, side: str = "above") -> Atom:
    """Deterministic fresh atom outside ``avoid``.

    ``above`` returns the smallest unused index >= 0, ``below`` the
    largest unused index < 0.
    """
    part = avoid.part(sort)
    if side == "above":
        i = 0
        while part.member(Atom(sort, i)):
            i += 1
        return Atom(sort, i)
    if side != "below":
        raise ValueError(f"side must be 'above' or 'below', got {side!r}")
    if part.mode is SetMode.FIN:
        i = -1
        while part.member(Atom(sort, i)):
            i -= 1
        return Atom(sort, i)
    holes = sorted((a for a in part.exceptions if a.is_below()), reverse=True)
    if not holes:
        raise FreshnessError(f"no atom of sort {sort.id} is free below")
    return holes[0]


def fresh_atoms(sort: NameSort, avoid: AtomSet, n: int, side: str = "above") -> list[Atom]:
    out = []
    for _ in range(n):
        a = fresh_atom(sort, avoid, side)
        out.append(a)
        avoid = set_add(avoid, [a])
    return out


def perm_str(p: Perm) -> str:
    if p.is_identity():
        return "id"
    pieces = []
    graph = p.graph_map()
    seen: set[Atom] = set()
    for a in sorted(graph):
        if a in seen:
            continue
        # print cycles as chained swaps for 2-cycles, cycle notation otherwise
        cycle = [a]
        seen.add(a)
        b = graph[a]
        while b != a:
            cycle.append(b)
            seen.add(b)
            b = graph[b]
        if len(cycle) == 2:
            pieces.append(f"({cycle[0]} {cycle[1]})")
        else:
            pieces.append("(" + " ".join(str(c) for c in cycle) + ")")
    for sort, k in p.shifts:
        pieces.append(f"shift{{{sort.id}}}" + (f"^{k}" if k != 1 else ""))
    return " . ".join(pieces)


def set_str(s: AtomSet) -> str:
    if not s.parts:
        return "{}"
    fin = sorted(a for _, p in s.parts if p.mode is SetMode.FIN for a in p.exceptions)
    cof = [(sort, p) for sort, p in s.parts if p.mode is SetMode.COFIN_BELOW]
    pieces = []
    if cof:
        excs = sorted(a for _, p in cof for a in p.exceptions)
        sorts = ",".join(sort.id for sort, _ in cof)
        body = f"A<[{sorts}]"
        if excs:
            body += " ^ {" + ", ".join(str(a) for a in excs) + "}"
        pieces.append(body)
    if fin:
        pieces.append("{" + ", ".join(str(a) for a in fin) + "}")
    return " u ".join(pieces) if pieces else "{}"
