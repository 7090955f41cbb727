"""Built-in axiomatic theories, the object first-order logic, its
embedding as terms, and a directed rewrite engine for the substitution
axioms.

The signature ships one name sort ``nu`` (object-level variable symbols)
and base sorts ``iota`` (individuals) and ``o`` (embedded formulas).
Embedded connectives carry an ``o`` prefix; ``holds`` is the truth
predicate on embedded formulas, ``eq_i``/``eq_o`` the equality
predicates.

Rewrite rules read the substitution axioms left to right.  Their atom
names are equivariant metavariables: matching may assign any distinct
concrete atoms, and the permission annotations are evaluated relative to
a permuted image of the below half, which reduces every side condition
to finitely many membership checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Union

from .atoms import (
    Atom,
    AtomSet,
    NameSort,
    Perm,
    fresh_atom,
    perm_inverse,
    set_add,
    set_member,
    set_remove,
    set_subset,
    set_union,
)
from .syntax import (
    Abs,
    AbsSort,
    App,
    BaseSort,
    Bot,
    Forall,
    Imp,
    Mod,
    Pred,
    Prop,
    Signature,
    TAtom,
    Term,
    Tuple_,
    TupleSort,
    UNIT,
    Unknown,
    alpha_eq,
    atoms_in,
    conj,
    fa,
    iff,
    perm1_act,
    typecheck_prop,
    typecheck_term,
    var,
)

NU = NameSort("nu")
IOTA = BaseSort("iota")
O = BaseSort("o")

BELOW = AtomSet.below([NU])


def builtin_signature_arith() -> Signature:
    """The signature for embedding first-order arithmetic."""
    return Signature.make(
        [NU],
        [IOTA, O],
        [
            ("zero", UNIT, IOTA),
            ("succ", IOTA, IOTA),
            ("plus", TupleSort((IOTA, IOTA)), IOTA),
            ("times", TupleSort((IOTA, IOTA)), IOTA),
            ("obot", UNIT, O),
            ("oimp", TupleSort((O, O)), O),
            ("oall", AbsSort(NU, O), O),
            ("oeq", TupleSort((IOTA, IOTA)), O),
            ("var", NU, IOTA),
            ("sub_i", TupleSort((AbsSort(NU, IOTA), IOTA)), IOTA),
            ("sub_o", TupleSort((AbsSort(NU, O), IOTA)), O),
        ],
        [
            ("eq_i", TupleSort((IOTA, IOTA))),
            ("eq_o", TupleSort((O, O))),
            ("holds", O),
        ],
    )


# Term-building shorthands over the arithmetic signature.

def zero() -> Term:
    return App("zero", Tuple_(()))


def succ(t: Term) -> Term:
    return App("succ", t)


def plus(t1: Term, t2: Term) -> Term:
    return App("plus", Tuple_((t1, t2)))


def times(t1: Term, t2: Term) -> Term:
    return App("times", Tuple_((t1, t2)))


def obot() -> Term:
    return App("obot", Tuple_(()))


def oimp(t1: Term, t2: Term) -> Term:
    return App("oimp", Tuple_((t1, t2)))


def oall(a: Atom, t: Term) -> Term:
    return App("oall", Abs(a, t))


def oeq(t1: Term, t2: Term) -> Term:
    return App("oeq", Tuple_((t1, t2)))


def avar(a: Atom) -> Term:
    return App("var", TAtom(a))


def sub_i(a: Atom, body: Term, t: Term) -> Term:
    return App("sub_i", Tuple_((Abs(a, body), t)))


def sub_o(a: Atom, body: Term, t: Term) -> Term:
    return App("sub_o", Tuple_((Abs(a, body), t)))


def oneg(t: Term) -> Term:
    return oimp(t, obot())


def oconj(t1: Term, t2: Term) -> Term:
    return oneg(oimp(t1, oneg(t2)))


def odisj(t1: Term, t2: Term) -> Term:
    return oimp(oneg(t1), t2)


def eq_i(t1: Term, t2: Term) -> Prop:
    return Pred("eq_i", Tuple_((t1, t2)))


def eq_o(t1: Term, t2: Term) -> Prop:
    return Pred("eq_o", Tuple_((t1, t2)))


def holds(t: Term) -> Prop:
    return Pred("holds", t)


def foralls(xs: Iterable[Unknown], body: Prop) -> Prop:
    out = body
    for x in reversed(list(xs)):
        out = Forall(x, out)
    return out


# ---------------------------------------------------------------------------
# The theories

@dataclass(frozen=True)
class Theory:
    name: str
    signature: Signature
    axioms: tuple[tuple[str, Prop], ...]

    def axiom(self, label: str) -> Prop:
        for l, p in self.axioms:
            if l == label:
                return p
        raise KeyError(f"theory {self.name} has no axiom {label!r}")

    def labels(self) -> list[str]:
        return [l for l, _ in self.axioms]

    def validate(self) -> None:
        from .syntax import fv

        for label, p in self.axioms:
            typecheck_prop(self.signature, p)
            if fv(p):
                raise ValueError(f"axiom {label} of {self.name} has free unknowns")


THEORY_NAMES = ("EQU", "SUB", "FOL", "ARITH", "LAM-IND", "FRESH", "ABS")

# Representative atoms of the figures: one from the below half, one from
# above it.
ATOM_A = Atom(NU, -1)
ATOM_B = Atom(NU, 0)

SWAPPED_BELOW = AtomSet.below([NU], [ATOM_A, ATOM_B])  # (b a) . A<


def _u(name: str, sort, pmss=BELOW) -> Unknown:
    return Unknown(name, sort, pmss)


def _equ_axioms() -> list[tuple[str, Prop]]:
    x1, x = _u("X1", IOTA), _u("X", IOTA)
    y1, y = _u("Y1", IOTA), _u("Y", IOTA)
    z1, z = _u("Z1", O), _u("Z", O)
    w1, w = _u("W1", O), _u("W", O)
    a = ATOM_A

    def both_i(op):
        return foralls(
            [x1, x, y1, y],
            Imp(conj(eq_i(var(x1), var(x)), eq_i(var(y1), var(y))),
                op(var(x1), var(y1), var(x), var(y))),
        )

    axioms = [
        ("eq2_plus", both_i(lambda a1, b1, a2, b2: eq_i(plus(a1, b1), plus(a2, b2)))),
        ("eq2_times", both_i(lambda a1, b1, a2, b2: eq_i(times(a1, b1), times(a2, b2)))),
        ("eq2_oimp", foralls(
            [z1, z, w1, w],
            Imp(conj(eq_o(var(z1), var(z)), eq_o(var(w1), var(w))),
                eq_o(oimp(var(z1), var(w1)), oimp(var(z), var(w)))),
        )),
        ("eq2_oeq", both_i(lambda a1, b1, a2, b2: eq_o(oeq(a1, b1), oeq(a2, b2)))),
        ("eq1_succ", foralls(
            [x1, x], Imp(eq_i(var(x1), var(x)), eq_i(succ(var(x1)), succ(var(x)))),
        )),
        ("eq0_i", Forall(x, eq_i(var(x), var(x)))),
        ("eq0_o", Forall(z, eq_o(var(z), var(z)))),
        ("eq_oall", foralls(
            [z1, z],
            Imp(eq_o(var(z1), var(z)),
                eq_o(oall(a, var(z1)), oall(a, var(z)))),
        )),
        ("eq_sub_i", foralls(
            [x1, x, y1, y],
            Imp(conj(eq_i(var(x1), var(x)), eq_i(var(y1), var(y))),
                eq_i(sub_i(a, var(x1), var(y1)), sub_i(a, var(x), var(y)))),
        )),
        ("eq_sub_o", foralls(
            [z1, z, y1, y],
            Imp(conj(eq_o(var(z1), var(z)), eq_i(var(y1), var(y))),
                eq_o(sub_o(a, var(z1), var(y1)), sub_o(a, var(z), var(y)))),
        )),
        ("eq_holds", foralls(
            [z1, z],
            Imp(eq_o(var(z1), var(z)), iff(holds(var(z1)), holds(var(z)))),
        )),
        ("eq_oeq_intro", foralls(
            [x1, x], Imp(eq_i(var(x1), var(x)), holds(oeq(var(x1), var(x)))),
        )),
    ]
    return axioms


def _sub_axioms() -> list[tuple[str, Prop]]:
    a, b = ATOM_A, ATOM_B
    x2, x1, x = _u("X2", IOTA), _u("X1", IOTA), _u("X", IOTA)
    z2, z1 = _u("Z2", O), _u("Z1", O)
    zi = _u("Zi", IOTA, SWAPPED_BELOW)
    zo = _u("Zo", O, SWAPPED_BELOW)
    zid = _u("Z", O)

    return [
        ("sub_var", Forall(x, eq_i(sub_i(a, avar(a), var(x)), var(x)))),
        ("sub_gc_i", foralls([x, zi], eq_i(sub_i(a, var(zi), var(x)), var(zi)))),
        ("sub_gc_o", foralls([x, zo], eq_o(sub_o(a, var(zo), var(x)), var(zo)))),
        ("sub_succ", foralls(
            [x1, x],
            eq_i(sub_i(a, succ(var(x1)), var(x)), succ(sub_i(a, var(x1), var(x)))),
        )),
        ("sub_plus", foralls(
            [x2, x1, x],
            eq_i(sub_i(a, plus(var(x2), var(x1)), var(x)),
                 plus(sub_i(a, var(x2), var(x)), sub_i(a, var(x1), var(x)))),
        )),
        ("sub_times", foralls(
            [x2, x1, x],
            eq_i(sub_i(a, times(var(x2), var(x1)), var(x)),
                 times(sub_i(a, var(x2), var(x)), sub_i(a, var(x1), var(x)))),
        )),
        ("sub_oimp", foralls(
            [z2, z1, x],
            eq_o(sub_o(a, oimp(var(z2), var(z1)), var(x)),
                 oimp(sub_o(a, var(z2), var(x)), sub_o(a, var(z1), var(x)))),
        )),
        ("sub_oeq", foralls(
            [x2, x1, x],
            eq_o(sub_o(a, oeq(var(x2), var(x1)), var(x)),
                 oeq(sub_i(a, var(x2), var(x)), sub_i(a, var(x1), var(x)))),
        )),
        ("sub_oall", foralls(
            [x, zo],
            eq_o(sub_o(a, oall(b, var(zo)), var(x)),
                 oall(b, sub_o(a, var(zo), var(x)))),
        )),
        ("sub_id_i", Forall(x, eq_i(sub_i(a, var(x), avar(a)), var(x)))),
        ("sub_id_o", Forall(zid, eq_o(sub_o(a, var(zid), avar(a)), var(zid)))),
    ]


def _fol_axioms() -> list[tuple[str, Prop]]:
    a = ATOM_A
    z1, z = _u("Z1", O), _u("Z", O)
    x = _u("X", IOTA)
    return [
        ("fol_oimp", foralls(
            [z1, z],
            iff(holds(oimp(var(z1), var(z))), Imp(holds(var(z1)), holds(var(z)))),
        )),
        ("fol_oall", Forall(
            z,
            iff(holds(oall(a, var(z))), Forall(x, holds(sub_o(a, var(z), var(x))))),
        )),
        ("fol_obot", Imp(holds(obot()), Bot())),
    ]


def _arith_axioms() -> list[tuple[str, Prop]]:
    a = ATOM_A
    x1, x = _u("X1", IOTA), _u("X", IOTA)
    z = _u("Z", O)
    return [
        ("arith_s0", Forall(x, Imp(eq_i(succ(var(x)), zero()), Bot()))),
        ("arith_ss", foralls(
            [x1, x],
            Imp(eq_i(succ(var(x1)), succ(var(x))), eq_i(var(x1), var(x))),
        )),
        ("arith_plus0", Forall(x, eq_i(plus(var(x), zero()), var(x)))),
        ("arith_plus_succ", foralls(
            [x1, x],
            eq_i(plus(var(x1), succ(var(x))), plus(succ(var(x1)), var(x))),
        )),
        ("arith_times0", Forall(x, eq_i(times(var(x), zero()), zero()))),
        ("arith_times_succ", foralls(
            [x1, x],
            eq_i(times(var(x1), succ(var(x))), plus(times(var(x1), var(x)), var(x))),
        )),
        ("arith_ind", Forall(z, Imp(
            holds(sub_o(a, var(z), zero())),
            Imp(
                Forall(x, Imp(holds(sub_o(a, var(z), var(x))),
                              holds(sub_o(a, var(z), succ(var(x)))))),
                Forall(x, holds(sub_o(a, var(z), var(x)))),
            ),
        ))),
    ]


def _lam_ind_axioms() -> list[tuple[str, Prop]]:
    a = ATOM_A
    x, y = _u("X", IOTA), _u("Y", IOTA)
    z = _u("Z", O)

    def lam(t):
        return App("lam", Abs(a, t))

    def app2(t1, t2):
        return App("app", Tuple_((t1, t2)))

    step_var = holds(sub_o(a, var(z), avar(a)))
    step_lam = Forall(x, Imp(holds(sub_o(a, var(z), var(x))),
                             holds(sub_o(a, var(z), lam(var(x))))))
    step_app = foralls(
        [x, y],
        Imp(holds(sub_o(a, var(z), var(x))),
            Imp(holds(sub_o(a, var(z), var(y))),
                holds(sub_o(a, var(z), app2(var(x), var(y)))))),
    )
    concl = Forall(x, holds(sub_o(a, var(z), var(x))))
    return [("lam_ind", Forall(z, Imp(step_var, Imp(step_lam, Imp(step_app, concl)))))]


def _fresh_axioms() -> list[tuple[str, Prop]]:
    a, b = ATOM_A, ATOM_B
    x = _u("X", IOTA)
    return [
        ("fresh_swap", Forall(
            x,
            iff(Pred("fresh", Tuple_((TAtom(a), var(x)))),
                eq_i(Mod(Perm.swap(b, a), x), var(x))),
        )),
    ]


def _abs_axioms() -> list[tuple[str, Prop]]:
    a, b = ATOM_A, ATOM_B
    x = _u("X", IOTA)

    def mk_abs(n, t):
        return App("abs", Tuple_((TAtom(n), t)))

    return [
        ("abs_rename", Forall(
            x, eq_i(mk_abs(b, Mod(Perm.swap(b, a), x)), mk_abs(a, var(x))),
        )),
    ]


def builtin_theory(name: str) -> Theory:
    """The named axiom set over the arithmetic signature (extended where
    the theory introduces formers)."""
    sig = builtin_signature_arith()
    if name == "EQU":
        thy = Theory("EQU", sig, tuple(_equ_axioms()))
    elif name == "SUB":
        thy = Theory("SUB", sig, tuple(_sub_axioms()))
    elif name == "FOL":
        thy = Theory("FOL", sig, tuple(_fol_axioms()))
    elif name == "ARITH":
        thy = Theory("ARITH", sig, tuple(_arith_axioms()))
    elif name == "LAM-IND":
        sig2 = sig.extend(term_formers=[
            ("lam", AbsSort(NU, IOTA), IOTA),
            ("app", TupleSort((IOTA, IOTA)), IOTA),
        ])
        thy = Theory("LAM-IND", sig2, tuple(_lam_ind_axioms()))
    elif name == "FRESH":
        sig2 = sig.extend(prop_formers=[("fresh", TupleSort((NU, IOTA)))])
        thy = Theory("FRESH", sig2, tuple(_fresh_axioms()))
    elif name == "ABS":
        sig2 = sig.extend(term_formers=[("abs", TupleSort((NU, IOTA)), IOTA)])
        thy = Theory("ABS", sig2, tuple(_abs_axioms()))
    else:
        raise KeyError(f"unknown theory {name!r}; expected one of {THEORY_NAMES}")
    thy.validate()
    return thy


def theory_s() -> list[Theory]:
    """The combined equality + substitution + first-order theories."""
    return [builtin_theory(n) for n in ("EQU", "SUB", "FOL")]


# ---------------------------------------------------------------------------
# Object first-order logic

@dataclass(frozen=True)
class FVar:
    atom: Atom

    def __repr__(self):
        return str(self.atom)


@dataclass(frozen=True)
class FZero:
    def __repr__(self):
        return "0"


@dataclass(frozen=True)
class FSucc:
    arg: "FolTerm"

    def __repr__(self):
        return f"succ({self.arg})"


@dataclass(frozen=True)
class FPlus:
    left: "FolTerm"
    right: "FolTerm"

    def __repr__(self):
        return f"({self.left} + {self.right})"


@dataclass(frozen=True)
class FTimes:
    left: "FolTerm"
    right: "FolTerm"

    def __repr__(self):
        return f"({self.left} * {self.right})"


FolTerm = Union[FVar, FZero, FSucc, FPlus, FTimes]


@dataclass(frozen=True)
class FEq:
    left: FolTerm
    right: FolTerm

    def __repr__(self):
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class FBot:
    def __repr__(self):
        return "false"


@dataclass(frozen=True)
class FImp:
    left: "FolFormula"
    right: "FolFormula"

    def __repr__(self):
        return f"({self.left} -> {self.right})"


@dataclass(frozen=True)
class FAll:
    atom: Atom
    body: "FolFormula"

    def __repr__(self):
        return f"(forall {self.atom}. {self.body})"


FolFormula = Union[FEq, FBot, FImp, FAll]


def fol_term_vars(t: FolTerm) -> set[Atom]:
    match t:
        case FVar(a):
            return {a}
        case FZero():
            return set()
        case FSucc(s):
            return fol_term_vars(s)
        case FPlus(l, r) | FTimes(l, r):
            return fol_term_vars(l) | fol_term_vars(r)
    raise TypeError(f"not a first-order term: {t!r}")


def fol_free_vars(f: FolFormula) -> set[Atom]:
    match f:
        case FEq(l, r):
            return fol_term_vars(l) | fol_term_vars(r)
        case FBot():
            return set()
        case FImp(l, r):
            return fol_free_vars(l) | fol_free_vars(r)
        case FAll(a, body):
            return fol_free_vars(body) - {a}
    raise TypeError(f"not a first-order formula: {f!r}")


def fol_all_atoms(f) -> set[Atom]:
    match f:
        case FVar(a):
            return {a}
        case FZero() | FBot():
            return set()
        case FSucc(s):
            return fol_all_atoms(s)
        case FPlus(l, r) | FTimes(l, r) | FImp(l, r) | FEq(l, r):
            return fol_all_atoms(l) | fol_all_atoms(r)
        case FAll(a, body):
            return fol_all_atoms(body) | {a}
    raise TypeError(f"not first-order syntax: {f!r}")


def fol_term_subst(t: FolTerm, a: Atom, s: FolTerm) -> FolTerm:
    match t:
        case FVar(b):
            return s if b == a else t
        case FZero():
            return t
        case FSucc(u):
            return FSucc(fol_term_subst(u, a, s))
        case FPlus(l, r):
            return FPlus(fol_term_subst(l, a, s), fol_term_subst(r, a, s))
        case FTimes(l, r):
            return FTimes(fol_term_subst(l, a, s), fol_term_subst(r, a, s))
    raise TypeError(f"not a first-order term: {t!r}")


def fol_subst(f: FolFormula, a: Atom, t: FolTerm) -> FolFormula:
    """Capture-avoiding substitution, renaming bound variables to the
    deterministic fresh choice below."""
    match f:
        case FEq(l, r):
            return FEq(fol_term_subst(l, a, t), fol_term_subst(r, a, t))
        case FBot():
            return f
        case FImp(l, r):
            return FImp(fol_subst(l, a, t), fol_subst(r, a, t))
        case FAll(b, body):
            if b == a or a not in fol_free_vars(body):
                return f
            if b in fol_term_vars(t):
                avoid = AtomSet.finite(
                    fol_all_atoms(body) | fol_term_vars(t) | {a, b}
                )
                c = fresh_atom(b.sort, avoid, "below")
                body = fol_subst(body, b, FVar(c))
                return FAll(c, fol_subst(body, a, t))
            return FAll(b, fol_subst(body, a, t))
    raise TypeError(f"not a first-order formula: {f!r}")


# ---------------------------------------------------------------------------
# The embedding of object syntax as terms

def amod_term(t: FolTerm) -> Term:
    match t:
        case FVar(a):
            return avar(a)
        case FZero():
            return zero()
        case FSucc(s):
            return succ(amod_term(s))
        case FPlus(l, r):
            return plus(amod_term(l), amod_term(r))
        case FTimes(l, r):
            return times(amod_term(l), amod_term(r))
    raise TypeError(f"not a first-order term: {t!r}")


def amod_formula(f: FolFormula) -> Term:
    match f:
        case FEq(l, r):
            return oeq(amod_term(l), amod_term(r))
        case FBot():
            return obot()
        case FImp(l, r):
            return oimp(amod_formula(l), amod_formula(r))
        case FAll(a, body):
            return oall(a, amod_formula(body))
    raise TypeError(f"not a first-order formula: {f!r}")


def _obj_conj_all(fs: list[Term]) -> Term:
    if not fs:
        return oneg(obot())
    out = fs[0]
    for f in fs[1:]:
        out = oconj(out, f)
    return out


def _obj_disj_all(fs: list[Term]) -> Term:
    if not fs:
        return obot()
    out = fs[0]
    for f in fs[1:]:
        out = odisj(out, f)
    return out


def amod_sequent(hyps: Iterable[FolFormula], goals: Iterable[FolFormula]) -> Prop:
    """Embed an object sequent as a single truth proposition, closing the
    free variables universally in ascending index order."""
    hyps, goals = list(hyps), list(goals)
    free: set[Atom] = set()
    for f in hyps + goals:
        free |= fol_free_vars(f)
    body = oimp(
        _obj_conj_all([amod_formula(f) for f in hyps]),
        _obj_disj_all([amod_formula(f) for f in goals]),
    )
    for a in sorted(free, key=lambda a: (a.sort.id, a.index), reverse=True):
        body = oall(a, body)
    return holds(body)


# ---------------------------------------------------------------------------
# Rewrite rules with equivariant atom metavariables

@dataclass(frozen=True)
class PermSpec:
    """Permission annotation of a rule unknown, evaluated relative to a
    permuted image Q of the below half.

    kind "below": instances fit inside Q.
    kind "swapped": instances fit (Q minus the atom named by ``removed``)
    plus the atom named by ``added``; the figure annotation (b a).A<.
    kind "extended": instances fit Q plus the atom named by ``added``.
    """

    kind: str
    removed: Optional[str] = None
    added: Optional[str] = None


SPEC_BELOW = PermSpec("below")
SPEC_SWAPPED = PermSpec("swapped", removed="a", added="b")
SPEC_EXTENDED = PermSpec("extended", added="b")


@dataclass(frozen=True)
class RuleAtom:
    """An equivariant atom metavariable with its representative side."""

    name: str
    sort: NameSort
    side: str  # "below" or "above": which side its representative lives on


@dataclass(frozen=True)
class RewriteRule:
    """A directed equation.  ``atoms`` are metavariables; inside the
    pattern they appear as the representative atoms listed in ``reps``."""

    label: str
    atoms: tuple[RuleAtom, ...]
    unknowns: tuple[tuple[Unknown, PermSpec], ...]
    lhs: Term
    rhs: Term
    eq_pred: str  # the equality predicate of the originating axiom
    reps: tuple[tuple[str, Atom], ...] = ()

    def atom_named(self, name: str) -> RuleAtom:
        for ra in self.atoms:
            if ra.name == name:
                return ra
        raise KeyError(name)

    def rep_of(self, name: str) -> Atom:
        for n, a in self.reps:
            if n == name:
                return a
        raise KeyError(name)

    def meta_of(self, a: Atom) -> Optional[str]:
        for n, rep in self.reps:
            if rep == a:
                return n
        return None

    def spec_of(self, x: Unknown) -> PermSpec:
        for u, spec in self.unknowns:
            if u == x:
                return spec
        raise KeyError(x.name)


# Representative atoms used inside the built-in rule patterns; matching
# treats them as variables.
RULE_A = ATOM_A
RULE_B = ATOM_B

_RA = RuleAtom("a", NU, "below")
_RB = RuleAtom("b", NU, "above")


def _rule(label, atoms, unknowns, lhs, rhs, eq_pred) -> RewriteRule:
    reps = []
    for ra in atoms:
        reps.append((ra.name, RULE_A if ra.side == "below" else RULE_B))
    return RewriteRule(label, tuple(atoms), tuple(unknowns), lhs, rhs, eq_pred,
                       tuple(reps))


def sub_rewrite_rules() -> list[RewriteRule]:
    """The substitution axioms oriented left to right.

    The quantifier rule keeps the binder out of the image of the below
    half but does allow the substituted atom to occur in the body, the
    weakest permission choice that keeps the rule sound; the figure's
    stricter annotation would leave substitutions under binders stuck
    whenever the substituted variable actually occurs.
    """
    a, b = RULE_A, RULE_B
    x2, x1, x = _u("X2", IOTA), _u("X1", IOTA), _u("X", IOTA)
    z2, z1 = _u("Z2", O), _u("Z1", O)
    zi = _u("Zi", IOTA, SWAPPED_BELOW)
    zo = _u("Zo", O, SWAPPED_BELOW)
    zq = _u("Zq", O, AtomSet.below([NU], [ATOM_B]))  # A< plus the binder
    zid = _u("Z", O)
    return [
        _rule("sub_var", [_RA], [(x, SPEC_BELOW)],
              sub_i(a, avar(a), var(x)), var(x), "eq_i"),
        _rule("sub_gc_i", [_RA, _RB], [(x, SPEC_BELOW), (zi, SPEC_SWAPPED)],
              sub_i(a, var(zi), var(x)), var(zi), "eq_i"),
        _rule("sub_gc_o", [_RA, _RB], [(x, SPEC_BELOW), (zo, SPEC_SWAPPED)],
              sub_o(a, var(zo), var(x)), var(zo), "eq_o"),
        _rule("sub_succ", [_RA], [(x1, SPEC_BELOW), (x, SPEC_BELOW)],
              sub_i(a, succ(var(x1)), var(x)), succ(sub_i(a, var(x1), var(x))), "eq_i"),
        _rule("sub_plus", [_RA],
              [(x2, SPEC_BELOW), (x1, SPEC_BELOW), (x, SPEC_BELOW)],
              sub_i(a, plus(var(x2), var(x1)), var(x)),
              plus(sub_i(a, var(x2), var(x)), sub_i(a, var(x1), var(x))), "eq_i"),
        _rule("sub_times", [_RA],
              [(x2, SPEC_BELOW), (x1, SPEC_BELOW), (x, SPEC_BELOW)],
              sub_i(a, times(var(x2), var(x1)), var(x)),
              times(sub_i(a, var(x2), var(x)), sub_i(a, var(x1), var(x))), "eq_i"),
        _rule("sub_oimp", [_RA],
              [(z2, SPEC_BELOW), (z1, SPEC_BELOW), (x, SPEC_BELOW)],
              sub_o(a, oimp(var(z2), var(z1)), var(x)),
              oimp(sub_o(a, var(z2), var(x)), sub_o(a, var(z1), var(x))), "eq_o"),
        _rule("sub_oeq", [_RA],
              [(x2, SPEC_BELOW), (x1, SPEC_BELOW), (x, SPEC_BELOW)],
              sub_o(a, oeq(var(x2), var(x1)), var(x)),
              oeq(sub_i(a, var(x2), var(x)), sub_i(a, var(x1), var(x))), "eq_o"),
        _rule("sub_oall", [_RA, _RB], [(x, SPEC_BELOW), (zq, SPEC_EXTENDED)],
              sub_o(a, oall(b, var(zq)), var(x)),
              oall(b, sub_o(a, var(zq), var(x))), "eq_o"),
        _rule("sub_id_i", [_RA], [(x, SPEC_BELOW)],
              sub_i(a, var(x), avar(a)), var(x), "eq_i"),
        _rule("sub_id_o", [_RA], [(zid, SPEC_BELOW)],
              sub_o(a, var(zid), avar(a)), var(zid), "eq_o"),
    ]


def lint_rules(rules: Iterable[RewriteRule]) -> list[str]:
    """Flag rules whose permission annotation differs from the figure's
    (b a).A< reading of the substitution axioms."""
    notes = []
    for r in rules:
        for u, spec in r.unknowns:
            if spec.kind == "extended":
                notes.append(
                    f"{r.label}: unknown {u.name} admits the substituted atom; "
                    "the axiom figure pins the stricter swapped permission set"
                )
    return notes


@dataclass
class MatchResult:
    atoms: dict[str, Atom]
    bindings: dict[Unknown, Term]


class _MatchFail(Exception):
    pass


def _bind_atom(env: MatchResult, name: str, value: Atom, rule: RewriteRule) -> None:
    ra = rule.atom_named(name)
    if value.sort != ra.sort:
        raise _MatchFail(f"sort of {value} differs from metavariable {name}")
    if name in env.atoms:
        if env.atoms[name] != value:
            raise _MatchFail(f"{name} already bound to {env.atoms[name]}")
        return
    if value in env.atoms.values():
        raise _MatchFail(f"{value} already taken; metavariables are distinct")
    env.atoms[name] = value


def _is_meta(rule: RewriteRule, a: Atom) -> Optional[str]:
    return rule.meta_of(a)


def _match_syntactic(rule: RewriteRule, pat: Term, tgt: Term, env: MatchResult,
                     fresh_binders: bool, sig: Signature) -> None:
    match (pat, tgt):
        case (TAtom(pa), TAtom(ta)):
            name = _is_meta(rule, pa)
            if name is None:
                if pa != ta:
                    raise _MatchFail(f"atom {ta} does not match {pa}")
            else:
                _bind_atom(env, name, ta, rule)
        case (Tuple_(ps), Tuple_(ts)):
            if len(ps) != len(ts):
                raise _MatchFail("tuple arity mismatch")
            for p, t in zip(ps, ts):
                _match_syntactic(rule, p, t, env, fresh_binders, sig)
        case (App(f, parg), App(g, targ)):
            if f != g:
                raise _MatchFail(f"former {g} does not match {f}")
            _match_syntactic(rule, parg, targ, env, fresh_binders, sig)
        case (Abs(pa, pbody), Abs(ta, tbody)):
            name = _is_meta(rule, pa)
            if name is None:
                raise _MatchFail("concrete binders in patterns are unsupported")
            ra = rule.atom_named(name)
            rename = (
                fresh_binders
                and ra.side == "above"
                and name not in env.atoms
            )
            if rename:
                avoid = AtomSet.finite(
                    atoms_in(tbody) | set(env.atoms.values()) | {ta}
                )
                avoid = set_union(avoid, fa(tbody))
                fresh = fresh_atom(ra.sort, avoid, "above")
                _bind_atom(env, name, fresh, rule)
                tbody = perm1_act(Perm.swap(fresh, ta), tbody)
            else:
                _bind_atom(env, name, ta, rule)
            _match_syntactic(rule, pbody, tbody, env, fresh_binders, sig)
        case (Mod(pperm, px), _):
            binding = perm1_act(_assign_perm_inverse(pperm, env, rule), tgt)
            if px in env.bindings:
                if not alpha_eq(env.bindings[px], binding):
                    raise _MatchFail(f"{px.name} bound twice inconsistently")
            else:
                if typecheck_term(sig, binding) != px.sort:
                    raise _MatchFail(f"binding for {px.name} has the wrong sort")
                env.bindings[px] = binding
        case _:
            raise _MatchFail(f"shape mismatch: {pat} vs {tgt}")


def _assign_perm(p: Perm, env: MatchResult, rule: RewriteRule) -> Perm:
    def go(a: Atom) -> Atom:
        name = _is_meta(rule, a)
        if name is None:
            return a
        if name not in env.atoms:
            raise _MatchFail(f"metavariable {name} unassigned in moderation")
        return env.atoms[name]

    graph = {go(a): go(b) for a, b in p.graph}
    return Perm.make(graph, p.shift_map())


def _assign_perm_inverse(p: Perm, env: MatchResult, rule: RewriteRule) -> Perm:
    return perm_inverse(_assign_perm(p, env, rule))


def _check_permissions(rule: RewriteRule, env: MatchResult) -> None:
    """Evaluate the permission annotations relative to some permuted image
    of the below half: collect what the image must contain and avoid, and
    test the finite disjointness this reduces to."""
    include = AtomSet.empty()
    exclude: set[Atom] = set()
    for ra in rule.atoms:
        assigned = env.atoms.get(ra.name)
        if assigned is None:
            continue
        if ra.side == "below":
            include = set_add(include, [assigned])
        else:
            exclude.add(assigned)
    for x, spec in rule.unknowns:
        if x not in env.bindings:
            continue
        support = fa(env.bindings[x])
        if spec.removed is not None:
            av = env.atoms.get(spec.removed)
            if av is not None and set_member(support, av):
                raise _MatchFail(
                    f"{x.name}: the substituted atom {av} occurs in the binding"
                )
        if spec.added is not None:
            bv = env.atoms.get(spec.added)
            if bv is not None:
                support = set_remove(support, [bv])
        include = set_union(include, support)
    for e in exclude:
        if set_member(include, e):
            raise _MatchFail(
                f"atom {e} must stay outside the permission image but is required inside"
            )


def match(rule: RewriteRule, target: Term, sig: Optional[Signature] = None) -> Optional[MatchResult]:
    """Find an equivariant instance of the rule's left-hand side that is
    alpha-equal to the target.

    Binders are matched directly first; if the permission side conditions
    fail, above-side binder metavariables are retried at fresh atoms
    (matching modulo alpha).
    """
    if sig is None:
        sig = builtin_signature_arith()
    for fresh_binders in (False, True):
        env = MatchResult({}, {})
        try:
            _match_syntactic(rule, rule.lhs, target, env, fresh_binders, sig)
            _check_permissions(rule, env)
            return env
        except _MatchFail:
            continue
    return None


def instantiate_rule_term(rule: RewriteRule, t: Term, env: MatchResult) -> Term:
    match t:
        case TAtom(a):
            name = _is_meta(rule, a)
            return t if name is None else TAtom(env.atoms[name])
        case Tuple_(items):
            return Tuple_(tuple(instantiate_rule_term(rule, r, env) for r in items))
        case App(f, arg):
            return App(f, instantiate_rule_term(rule, arg, env))
        case Abs(a, body):
            name = _is_meta(rule, a)
            binder = env.atoms[name] if name is not None else a
            return Abs(binder, instantiate_rule_term(rule, body, env))
        case Mod(p, x):
            inst = _assign_perm(p, env, rule)
            if x in env.bindings:
                return perm1_act(inst, env.bindings[x])
            return Mod(inst, x)
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# The rewriter

@dataclass(frozen=True)
class RewriteStep:
    position: tuple[int, ...]
    rule: str
    redex: Term
    result: Term
    equality: Prop


@dataclass(frozen=True)
class RewriteResult:
    term: Term
    steps: tuple[RewriteStep, ...]
    fuel_exhausted: bool


def _children(t: Term) -> list[Term]:
    match t:
        case Tuple_(items):
            return list(items)
        case App(_, arg) | Abs(_, arg):
            return [arg]
        case _:
            return []


def _with_child(t: Term, i: int, c: Term) -> Term:
    match t:
        case Tuple_(items):
            out = list(items)
            out[i] = c
            return Tuple_(tuple(out))
        case App(f, _):
            return App(f, c)
        case Abs(a, _):
            return Abs(a, c)
    raise IndexError(i)


def _step_at(rules, t: Term, sig, pos: tuple[int, ...]):
    """Leftmost-innermost single step: children first, then the root."""
    for i, c in enumerate(_children(t)):
        got = _step_at(rules, c, sig, pos + (i,))
        if got is not None:
            t2, step = got
            return _with_child(t, i, t2), step
    for rule in rules:
        env = match(rule, t, sig)
        if env is not None:
            result = instantiate_rule_term(rule, rule.rhs, env)
            step = RewriteStep(
                position=pos,
                rule=rule.label,
                redex=t,
                result=result,
                equality=Pred(rule.eq_pred, Tuple_((t, result))),
            )
            return result, step
    return None


def rewrite(rules: Iterable[RewriteRule], t: Term, fuel: int = 10_000,
            sig: Optional[Signature] = None) -> RewriteResult:
    """Repeatedly rewrite at the leftmost-innermost matching position.

    Returns the final term with the step trace; when fuel runs out the
    partial result is returned and flagged.
    """
    rules = list(rules)
    if sig is None:
        sig = builtin_signature_arith()
    steps: list[RewriteStep] = []
    for _ in range(fuel):
        got = _step_at(rules, t, sig, ())
        if got is None:
            return RewriteResult(t, tuple(steps), False)
        t, step = got
        steps.append(step)
    if _step_at(rules, t, sig, ()) is None:
        return RewriteResult(t, tuple(steps), False)
    return RewriteResult(t, tuple(steps), True)
