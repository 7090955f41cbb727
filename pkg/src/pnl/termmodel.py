"""The term model: terms interpreted over themselves.

A valuation sends unknowns to terms within their sort and permission
set; interpretation is the structural map with term-formers read as
themselves and moderated unknowns read through the valuation.  Truth of
propositions is not computable in this model (the universal case
minimises over infinitely many elements), so the module stops at the
term level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .atoms import set_subset
from .syntax import (
    Abs,
    App,
    Mod,
    Signature,
    TAtom,
    Term,
    Tuple_,
    Unknown,
    fa,
    perm1_act,
    typecheck_term,
    var,
)


class ValuationError(Exception):
    pass


@dataclass(frozen=True)
class Valuation:
    """Finite map from unknowns to term-model elements, identity elsewhere."""

    graph: tuple[tuple[Unknown, Term], ...] = ()

    @staticmethod
    def make(mapping: dict[Unknown, Term], sig: Optional[Signature] = None) -> "Valuation":
        for x, t in mapping.items():
            if not set_subset(fa(t), x.pmss):
                raise ValuationError(
                    f"support of {t} is not within the permission set of {x.name}"
                )
            if sig is not None and typecheck_term(sig, t) != x.sort:
                raise ValuationError(f"{t} does not live in the sort of {x.name}")
        return Valuation(tuple(sorted(mapping.items(), key=lambda kv: kv[0].name)))

    def lookup(self, x: Unknown) -> Term:
        return dict(self.graph).get(x, var(x))

    def updated(self, x: Unknown, t: Term, sig: Optional[Signature] = None) -> "Valuation":
        m = dict(self.graph)
        m[x] = t
        return Valuation.make(m, sig)


def identity_valuation() -> Valuation:
    """The valuation reading every unknown as itself; its image of any
    term is alpha-equal to the term."""
    return Valuation()


def interp_term(val: Valuation, t: Term) -> Term:
    match t:
        case TAtom(_):
            return t
        case Tuple_(items):
            return Tuple_(tuple(interp_term(val, r) for r in items))
        case App(f, arg):
            return App(f, interp_term(val, arg))
        case Abs(a, body):
            return Abs(a, interp_term(val, body))
        case Mod(p, x):
            return perm1_act(p, val.lookup(x))
    raise TypeError(f"not a term: {t!r}")
