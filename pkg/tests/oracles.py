"""Independent oracles the tests check the kernel against.

The alpha oracle decides equivalence by enumerating fresh renamings over
a bounded atom window instead of the swapping/agreement procedure under
test; the window half-width comes from PNL_ATOM_WINDOW (default 8) and
must exceed every index occurring in the compared terms.
"""

from __future__ import annotations

import os

from pnl.atoms import Atom, Perm
from pnl.syntax import (
    Abs,
    App,
    Bot,
    Forall,
    Imp,
    Mod,
    Perm2,
    Pred,
    TAtom,
    Tuple_,
    fa,
    fresh_unknown,
    fv,
    perm1_act,
    perm2_act,
    unknowns_in,
)


def window() -> int:
    return int(os.environ.get("PNL_ATOM_WINDOW", "8"))


def index_bound(t) -> int:
    """The largest index magnitude occurring anywhere in the tree."""
    match t:
        case TAtom(a):
            return abs(a.index)
        case Tuple_(items):
            return max((index_bound(r) for r in items), default=0)
        case App(_, arg) | Pred(_, arg):
            return index_bound(arg)
        case Abs(a, body):
            return max(abs(a.index), index_bound(body))
        case Mod(p, x):
            b = p.support_bound()
            return max(b, x.pmss.index_bound())
        case Bot():
            return 0
        case Imp(l, r):
            return max(index_bound(l), index_bound(r))
        case Forall(_, body):
            return index_bound(body)
    raise TypeError(f"not syntax: {t!r}")


def alpha_oracle(u, v, w: int | None = None) -> bool:
    """Brute-force alpha-equivalence.

    Abstractions are compared at every fresh window atom; moderated
    unknowns by sampling every permission-set atom in the window.
    """
    if w is None:
        w = max(window(), index_bound(u) + 1, index_bound(v) + 1)
    match (u, v):
        case (TAtom(a), TAtom(b)):
            return a == b
        case (Tuple_(xs), Tuple_(ys)):
            return len(xs) == len(ys) and all(
                alpha_oracle(x, y, w) for x, y in zip(xs, ys)
            )
        case (App(f, x), App(g, y)):
            return f == g and alpha_oracle(x, y, w)
        case (Abs(a, r), Abs(b, s)):
            if a.sort != b.sort:
                return False
            far, fas = fa(r), fa(s)
            candidates = [
                c for c in (Atom(a.sort, i) for i in range(-w, w + 1))
                if c not in (a, b) and not far.member(c) and not fas.member(c)
            ]
            assert candidates, "window exhausted in the alpha oracle"
            return all(
                alpha_oracle(perm1_act(Perm.swap(c, a), r),
                             perm1_act(Perm.swap(c, b), s), w)
                for c in candidates
            )
        case (Mod(p, x), Mod(q, y)):
            if x != y:
                return False
            for sort in x.pmss.sorts():
                for i in range(-w, w + 1):
                    at = Atom(sort, i)
                    if x.pmss.member(at) and p.apply(at) != q.apply(at):
                        return False
            return True
        case (Bot(), Bot()):
            return True
        case (Imp(l1, r1), Imp(l2, r2)):
            return alpha_oracle(l1, l2, w) and alpha_oracle(r1, r2, w)
        case (Pred(f, x), Pred(g, y)):
            return f == g and alpha_oracle(x, y, w)
        case (Forall(x, p), Forall(y, q)):
            if x.sort != y.sort or x.pmss != y.pmss:
                return False
            if x == y:
                return alpha_oracle(p, q, w)
            if y in fv(p):
                return False
            names = {z.name for z in unknowns_in(p) | unknowns_in(q)}
            z = fresh_unknown(x, names)
            return alpha_oracle(
                perm2_act(Perm2.swap(z, x), p), perm2_act(Perm2.swap(z, y), q), w
            )
    return False
