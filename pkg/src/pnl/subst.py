"""Level-2 substitutions and their capturing action.

A substitution maps finitely many unknowns to terms of the same sort
whose free atoms fit the unknown's permission set.  The action pushes
under atom abstractions unchanged (capture is intended there) and
freshens quantifier binders that would collide with the substitution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .atoms import AtomSet, set_subset
from .syntax import (
    Abs,
    App,
    Bot,
    Forall,
    Imp,
    Mod,
    Perm2,
    Pred,
    Prop,
    Signature,
    Term,
    TAtom,
    Tuple_,
    Unknown,
    alpha_eq,
    fa,
    fresh_unknown,
    fv,
    perm1_act,
    perm2_act,
    typecheck_term,
    unknowns_in,
    var,
)


class SubstitutionError(Exception):
    pass


@dataclass(frozen=True)
class Substitution:
    """Finite map from unknowns to terms; unmapped unknowns stay themselves."""

    graph: tuple[tuple[Unknown, Term], ...] = ()

    @staticmethod
    def make(mapping: dict[Unknown, Term], sig: Optional[Signature] = None) -> "Substitution":
        graph = {}
        for x, t in mapping.items():
            if alpha_eq(t, var(x)):
                continue
            if not set_subset(fa(t), x.pmss):
                raise SubstitutionError(
                    f"free atoms of {t} are not permitted in {x.name} (pmss {x.pmss})"
                )
            if sig is not None and typecheck_term(sig, t) != x.sort:
                raise SubstitutionError(f"{t} does not have the sort of {x.name}")
            graph[x] = t
        return Substitution(tuple(sorted(graph.items(), key=lambda kv: kv[0].name)))

    @staticmethod
    def identity() -> "Substitution":
        return Substitution()

    def lookup(self, x: Unknown) -> Term:
        return dict(self.graph).get(x, var(x))

    def domain(self) -> set[Unknown]:
        return {x for x, _ in self.graph}

    def __repr__(self):
        if not self.graph:
            return "[]"
        return "[" + ", ".join(f"{x.name} := {t}" for x, t in self.graph) + "]"


def subst_single(x: Unknown, t: Term, sig: Optional[Signature] = None) -> Substitution:
    """The substitution sending ``x`` to ``t`` and all others to themselves.

    Rejects bindings whose free atoms escape the permission set; admitting
    those would make the action ill-defined on alpha-classes.
    """
    return Substitution.make({x: t}, sig)


def nontriv_subst(theta: Substitution) -> set[Unknown]:
    """Unknowns the substitution can produce or consume."""
    out: set[Unknown] = set()
    for x, t in theta.graph:
        out.add(x)
        out |= fv(t)
    return out


def subst_apply(theta: Substitution, u, avoid_names: Iterable[str] = ()):
    """Apply a substitution to a term or proposition.

    Quantifier binders in ``nontriv(theta)`` are renamed to fresh unknowns
    of the same sort and permission set before descending; the fresh names
    additionally avoid ``avoid_names``.
    """
    if not theta.graph:
        return u
    nontriv = nontriv_subst(theta)
    base_avoid = {x.name for x in nontriv}
    base_avoid.update(avoid_names)
    for _, t in theta.graph:
        base_avoid.update(y.name for y in unknowns_in(t))
    return _apply(theta, u, nontriv, base_avoid)


def _apply(theta: Substitution, u, nontriv: set[Unknown], avoid: set[str]):
    match u:
        case TAtom(_):
            return u
        case Tuple_(items):
            return Tuple_(tuple(_apply(theta, r, nontriv, avoid) for r in items))
        case App(f, arg):
            return App(f, _apply(theta, arg, nontriv, avoid))
        case Abs(a, body):
            return Abs(a, _apply(theta, body, nontriv, avoid))
        case Mod(p, x):
            return perm1_act(p, theta.lookup(x))
        case Bot():
            return u
        case Imp(l, r):
            return Imp(_apply(theta, l, nontriv, avoid), _apply(theta, r, nontriv, avoid))
        case Pred(name, arg):
            return Pred(name, _apply(theta, arg, nontriv, avoid))
        case Forall(x, body):
            if x in nontriv:
                seen = avoid | {y.name for y in unknowns_in(body)}
                x2 = fresh_unknown(x, seen)
                body = perm2_act(Perm2.swap(x, x2), body)
                return Forall(x2, _apply(theta, body, nontriv, avoid | {x2.name}))
            return Forall(x, _apply(theta, body, nontriv, avoid))
    raise TypeError(f"not syntax: {u!r}")
