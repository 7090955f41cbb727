"""Two-level syntax: sorts, signatures, terms, propositions.

Terms are stored as raw trees; the kernel never normalizes them and all
equality tests go through :func:`alpha_eq`.  Level-1 permutations act on
atoms, level-2 permutations act on unknowns; both actions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .atoms import (
    Atom,
    AtomSet,
    NameSort,
    Perm,
    perm_agrees_on,
    perm_compose,
    set_apply_perm,
    set_remove,
    set_union,
)


# ---------------------------------------------------------------------------
# Sorts and signatures

@dataclass(frozen=True)
class BaseSort:
    id: str

    def __repr__(self):
        return f"BaseSort({self.id!r})"


@dataclass(frozen=True)
class TupleSort:
    items: tuple["Sort", ...]

    def __repr__(self):
        return "(" + ", ".join(map(str, self.items)) + ")"


@dataclass(frozen=True)
class AbsSort:
    binder: NameSort
    body: "Sort"

    def __repr__(self):
        return f"[{self.binder.id}]{self.body}"


Sort = Union[NameSort, BaseSort, TupleSort, AbsSort]

UNIT = TupleSort(())


class SignatureError(Exception):
    pass


@dataclass(frozen=True)
class Signature:
    name_sorts: tuple[NameSort, ...]
    base_sorts: tuple[BaseSort, ...]
    term_formers: tuple[tuple[str, Sort, BaseSort], ...]  # (name, arg sort, result)
    prop_formers: tuple[tuple[str, Sort], ...]

    @staticmethod
    def make(name_sorts, base_sorts, term_formers, prop_formers) -> "Signature":
        sig = Signature(
            tuple(name_sorts), tuple(base_sorts),
            tuple(term_formers), tuple(prop_formers),
        )
        sig.validate()
        return sig

    def validate(self) -> None:
        tf = [n for n, _, _ in self.term_formers]
        pf = [n for n, _ in self.prop_formers]
        if len(set(tf)) != len(tf) or len(set(pf)) != len(pf):
            raise SignatureError("duplicate former declaration")
        if set(tf) & set(pf):
            raise SignatureError("term- and proposition-former names overlap")
        for n, arg, res in self.term_formers:
            self.check_sort(arg)
            self.check_sort(res)
        for n, arg in self.prop_formers:
            self.check_sort(arg)

    def check_sort(self, sort: Sort) -> None:
        if isinstance(sort, NameSort):
            if sort not in self.name_sorts:
                raise SignatureError(f"undeclared name sort {sort.id}")
        elif isinstance(sort, BaseSort):
            if sort not in self.base_sorts:
                raise SignatureError(f"undeclared base sort {sort.id}")
        elif isinstance(sort, TupleSort):
            for s in sort.items:
                self.check_sort(s)
        elif isinstance(sort, AbsSort):
            self.check_sort(sort.binder)
            self.check_sort(sort.body)
        else:
            raise SignatureError(f"not a sort: {sort!r}")

    def term_former(self, name: str) -> tuple[Sort, BaseSort]:
        for n, arg, res in self.term_formers:
            if n == name:
                return arg, res
        raise SignatureError(f"undeclared term-former {name!r}")

    def prop_former(self, name: str) -> Sort:
        for n, arg in self.prop_formers:
            if n == name:
                return arg
        raise SignatureError(f"undeclared proposition-former {name!r}")

    def has_term_former(self, name: str) -> bool:
        return any(n == name for n, _, _ in self.term_formers)

    def has_prop_former(self, name: str) -> bool:
        return any(n == name for n, _ in self.prop_formers)

    def extend(self, name_sorts=(), base_sorts=(), term_formers=(), prop_formers=()) -> "Signature":
        return Signature.make(
            self.name_sorts + tuple(s for s in name_sorts if s not in self.name_sorts),
            self.base_sorts + tuple(s for s in base_sorts if s not in self.base_sorts),
            self.term_formers + tuple(term_formers),
            self.prop_formers + tuple(prop_formers),
        )


# ---------------------------------------------------------------------------
# Unknowns

@dataclass(frozen=True)
class Unknown:
    """A level-2 variable.  Identity is (name, sort, permission set)."""

    name: str
    sort: Sort
    pmss: AtomSet

    def __post_init__(self):
        if not self.pmss.is_permission_set():
            raise ValueError(
                f"unknown {self.name} needs a permission set "
                f"(below-cofinite in every sort), got {self.pmss}"
            )

    def __repr__(self):
        return self.name


def fresh_unknown(base: Unknown, avoid_names: Iterable[str]) -> Unknown:
    """A renamed copy of ``base`` whose name avoids the given set."""
    avoid = set(avoid_names)
    stem = base.name.rstrip("0123456789")
    i = 1
    while f"{stem}{i}" in avoid or f"{stem}{i}" == base.name:
        i += 1
    return Unknown(f"{stem}{i}", base.sort, base.pmss)


# ---------------------------------------------------------------------------
# Terms and propositions

@dataclass(frozen=True)
class TAtom:
    atom: Atom

    def __repr__(self):
        return str(self.atom)


@dataclass(frozen=True)
class Tuple_:
    items: tuple["Term", ...]

    def __repr__(self):
        return "(" + ", ".join(map(str, self.items)) + ")"


@dataclass(frozen=True)
class App:
    former: str
    arg: "Term"

    def __repr__(self):
        if isinstance(self.arg, Tuple_):
            return f"{self.former}{self.arg}"
        return f"{self.former}({self.arg})"


@dataclass(frozen=True)
class Abs:
    atom: Atom
    body: "Term"

    def __repr__(self):
        return f"[{self.atom}] {self.body}"


@dataclass(frozen=True)
class Mod:
    """A moderated unknown: a suspended permutation over an unknown."""

    perm: Perm
    unknown: Unknown

    def __repr__(self):
        if self.perm.is_identity():
            return self.unknown.name
        return f"({self.perm}) * {self.unknown.name}"


Term = Union[TAtom, Tuple_, App, Abs, Mod]


@dataclass(frozen=True)
class Bot:
    def __repr__(self):
        return "false"


@dataclass(frozen=True)
class Imp:
    left: "Prop"
    right: "Prop"

    def __repr__(self):
        return f"({self.left} => {self.right})"


@dataclass(frozen=True)
class Pred:
    former: str
    arg: Term

    def __repr__(self):
        if isinstance(self.arg, Tuple_):
            return f"{self.former}{self.arg}"
        return f"{self.former}({self.arg})"


@dataclass(frozen=True)
class Forall:
    unknown: Unknown
    body: "Prop"

    def __repr__(self):
        return f"forall {self.unknown.name}. {self.body}"


Prop = Union[Bot, Imp, Pred, Forall]


def var(x: Unknown) -> Mod:
    return Mod(Perm.identity(), x)


def atom(a: Atom) -> TAtom:
    return TAtom(a)


# Convenience constructors for the de-Morgan sugar over bottom/implication.

def neg(p: Prop) -> Prop:
    return Imp(p, Bot())


def conj(p: Prop, q: Prop) -> Prop:
    return neg(Imp(p, neg(q)))


def disj(p: Prop, q: Prop) -> Prop:
    return Imp(neg(p), q)


def iff(p: Prop, q: Prop) -> Prop:
    return conj(Imp(p, q), Imp(q, p))


# ---------------------------------------------------------------------------
# Typechecking

class SortError(Exception):
    pass


def typecheck_term(sig: Signature, t: Term) -> Sort:
    match t:
        case TAtom(a):
            if a.sort not in sig.name_sorts:
                raise SortError(f"atom {a} of undeclared sort {a.sort.id}")
            return a.sort
        case Tuple_(items):
            return TupleSort(tuple(typecheck_term(sig, r) for r in items))
        case App(f, arg):
            want, result = sig.term_former(f)
            got = typecheck_term(sig, arg)
            if got != want:
                raise SortError(f"{f} expects argument of sort {want}, got {got}")
            return result
        case Abs(a, body):
            if a.sort not in sig.name_sorts:
                raise SortError(f"binder {a} of undeclared sort {a.sort.id}")
            return AbsSort(a.sort, typecheck_term(sig, body))
        case Mod(_, x):
            sig.check_sort(x.sort)
            return x.sort
    raise SortError(f"not a term: {t!r}")


def typecheck_prop(sig: Signature, p: Prop) -> None:
    match p:
        case Bot():
            return
        case Imp(l, r):
            typecheck_prop(sig, l)
            typecheck_prop(sig, r)
        case Pred(name, arg):
            want = sig.prop_former(name)
            got = typecheck_term(sig, arg)
            if got != want:
                raise SortError(f"{name} expects argument of sort {want}, got {got}")
        case Forall(x, body):
            sig.check_sort(x.sort)
            typecheck_prop(sig, body)
        case _:
            raise SortError(f"not a proposition: {p!r}")


# ---------------------------------------------------------------------------
# Level-1 permutation action

def perm1_act(p: Perm, t):
    if p.is_identity():
        return t
    match t:
        case TAtom(a):
            return TAtom(p.apply(a))
        case Tuple_(items):
            return Tuple_(tuple(perm1_act(p, r) for r in items))
        case App(f, arg):
            return App(f, perm1_act(p, arg))
        case Abs(a, body):
            return Abs(p.apply(a), perm1_act(p, body))
        case Mod(q, x):
            return Mod(perm_compose(p, q), x)
        case Bot():
            return t
        case Imp(l, r):
            return Imp(perm1_act(p, l), perm1_act(p, r))
        case Pred(name, arg):
            return Pred(name, perm1_act(p, arg))
        case Forall(x, body):
            return Forall(x, perm1_act(p, body))
    raise TypeError(f"not syntax: {t!r}")


# ---------------------------------------------------------------------------
# Level-2 permutation action

@dataclass(frozen=True)
class Perm2:
    """A finite sort- and permission-set-preserving bijection on unknowns."""

    graph: tuple[tuple[Unknown, Unknown], ...] = ()

    @staticmethod
    def make(graph: dict[Unknown, Unknown]) -> "Perm2":
        graph = {x: y for x, y in graph.items() if x != y}
        for x, y in graph.items():
            if x.sort != y.sort or x.pmss != y.pmss:
                raise ValueError(f"level-2 map {x} -> {y} changes sort or permission set")
        values = list(graph.values())
        if len(set(values)) != len(values) or set(values) != set(graph):
            raise ValueError("level-2 map is not a bijection on its domain")
        return Perm2(tuple(sorted(graph.items(), key=lambda kv: kv[0].name)))

    @staticmethod
    def swap(x: Unknown, y: Unknown) -> "Perm2":
        if x == y:
            return Perm2()
        return Perm2.make({x: y, y: x})

    def apply(self, x: Unknown) -> Unknown:
        return dict(self.graph).get(x, x)

    def is_identity(self) -> bool:
        return not self.graph


def perm2_act(pp: Perm2, t):
    if pp.is_identity():
        return t
    match t:
        case TAtom(_):
            return t
        case Tuple_(items):
            return Tuple_(tuple(perm2_act(pp, r) for r in items))
        case App(f, arg):
            return App(f, perm2_act(pp, arg))
        case Abs(a, body):
            return Abs(a, perm2_act(pp, body))
        case Mod(q, x):
            return Mod(q, pp.apply(x))
        case Bot():
            return t
        case Imp(l, r):
            return Imp(perm2_act(pp, l), perm2_act(pp, r))
        case Pred(name, arg):
            return Pred(name, perm2_act(pp, arg))
        case Forall(x, body):
            return Forall(pp.apply(x), perm2_act(pp, body))
    raise TypeError(f"not syntax: {t!r}")


# ---------------------------------------------------------------------------
# Free atoms and free unknowns

def fa(t) -> AtomSet:
    match t:
        case TAtom(a):
            return AtomSet.finite([a])
        case Tuple_(items):
            out = AtomSet.empty()
            for r in items:
                out = set_union(out, fa(r))
            return out
        case App(_, arg):
            return fa(arg)
        case Abs(a, body):
            return set_remove(fa(body), [a])
        case Mod(q, x):
            return set_apply_perm(q, x.pmss)
        case Bot():
            return AtomSet.empty()
        case Imp(l, r):
            return set_union(fa(l), fa(r))
        case Pred(_, arg):
            return fa(arg)
        case Forall(_, body):
            return fa(body)
    raise TypeError(f"not syntax: {t!r}")


def fv(t) -> set[Unknown]:
    match t:
        case TAtom(_) | Bot():
            return set()
        case Tuple_(items):
            out: set[Unknown] = set()
            for r in items:
                out |= fv(r)
            return out
        case App(_, arg) | Pred(_, arg):
            return fv(arg)
        case Abs(_, body):
            return fv(body)
        case Mod(_, x):
            return {x}
        case Imp(l, r):
            return fv(l) | fv(r)
        case Forall(x, body):
            return fv(body) - {x}
    raise TypeError(f"not syntax: {t!r}")


def atoms_in(t) -> set[Atom]:
    """Every atom occurring anywhere in the tree, including binders and
    moderating permutations; a syntactic over-approximation of fa."""
    match t:
        case TAtom(a):
            return {a}
        case Tuple_(items):
            out: set[Atom] = set()
            for r in items:
                out |= atoms_in(r)
            return out
        case App(_, arg) | Pred(_, arg):
            return atoms_in(arg)
        case Abs(a, body):
            return atoms_in(body) | {a}
        case Mod(q, x):
            out = {a for pair in q.graph for a in pair}
            out |= x.pmss.exception_atoms()
            return out
        case Bot():
            return set()
        case Imp(l, r):
            return atoms_in(l) | atoms_in(r)
        case Forall(_, body):
            return atoms_in(body)
    raise TypeError(f"not syntax: {t!r}")


def unknowns_in(t) -> set[Unknown]:
    """Every unknown occurring in the tree, free or bound."""
    match t:
        case TAtom(_) | Bot():
            return set()
        case Tuple_(items):
            out: set[Unknown] = set()
            for r in items:
                out |= unknowns_in(r)
            return out
        case App(_, arg) | Pred(_, arg):
            return unknowns_in(arg)
        case Abs(_, body):
            return unknowns_in(body)
        case Mod(_, x):
            return {x}
        case Imp(l, r):
            return unknowns_in(l) | unknowns_in(r)
        case Forall(x, body):
            return unknowns_in(body) | {x}
    raise TypeError(f"not syntax: {t!r}")


# ---------------------------------------------------------------------------
# Alpha-equivalence

def alpha_eq(u, v) -> bool:
    """Decide alpha-equivalence of terms or propositions.

    Abstractions are compared by swapping the binders; moderated unknowns
    by agreement of the moderations on the permission set; quantifiers by
    a level-2 swap of the bound unknowns.
    """
    match (u, v):
        case (TAtom(a), TAtom(b)):
            return a == b
        case (Tuple_(xs), Tuple_(ys)):
            return len(xs) == len(ys) and all(alpha_eq(x, y) for x, y in zip(xs, ys))
        case (App(f, x), App(g, y)):
            return f == g and alpha_eq(x, y)
        case (Abs(a, r), Abs(b, s)):
            if a == b:
                return alpha_eq(r, s)
            if a.sort != b.sort:
                return False
            if fa(r).member(b):
                return False
            return alpha_eq(perm1_act(Perm.swap(b, a), r), s)
        case (Mod(p, x), Mod(q, y)):
            return x == y and perm_agrees_on(p, q, x.pmss)
        case (Bot(), Bot()):
            return True
        case (Imp(l1, r1), Imp(l2, r2)):
            return alpha_eq(l1, l2) and alpha_eq(r1, r2)
        case (Pred(f, x), Pred(g, y)):
            return f == g and alpha_eq(x, y)
        case (Forall(x, p), Forall(y, q)):
            if x == y:
                return alpha_eq(p, q)
            if x.sort != y.sort or x.pmss != y.pmss:
                return False
            if y in fv(p):
                return False
            return alpha_eq(perm2_act(Perm2.swap(y, x), p), q)
    return False


def term_size(t) -> int:
    """Node count; moderated unknowns count one."""
    match t:
        case TAtom(_) | Mod(_, _) | Bot():
            return 1
        case Tuple_(items):
            return 1 + sum(term_size(r) for r in items)
        case App(_, arg) | Pred(_, arg) | Abs(_, arg):
            return 1 + term_size(arg)
        case Imp(l, r):
            return 1 + term_size(l) + term_size(r)
        case Forall(_, body):
            return 1 + term_size(body)
    raise TypeError(f"not syntax: {t!r}")


def prop_size(p: Prop) -> int:
    """Connective count of the proposition layer; predicates count one
    regardless of their term argument, so substitution preserves it."""
    match p:
        case Bot() | Pred(_, _):
            return 1
        case Imp(l, r):
            return 1 + prop_size(l) + prop_size(r)
        case Forall(_, body):
            return 1 + prop_size(body)
    raise TypeError(f"not a proposition: {p!r}")
