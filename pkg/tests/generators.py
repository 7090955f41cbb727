"""Seeded random generators for the test corpora: permutations, atom
sets, terms, propositions, substitutions, and checked derivations."""

from __future__ import annotations

import random

from pnl.atoms import Atom, AtomSet, NameSort, Perm, perm_compose, set_subset, set_union
from pnl.proofs import (
    Derivation,
    Sequent,
    ax,
    bot_l,
    cut,
    forall_l,
    forall_r,
    imp_l,
    imp_r,
    seq_add,
    seq_remove,
    weaken,
    weaken_to,
)
from pnl.subst import Substitution, subst_apply, subst_single
from pnl.syntax import (
    Abs,
    AbsSort,
    App,
    BaseSort,
    Bot,
    Forall,
    Imp,
    Mod,
    Perm2,
    Pred,
    Signature,
    TAtom,
    Tuple_,
    TupleSort,
    Unknown,
    alpha_eq,
    fa,
    fresh_unknown,
    fv,
    perm1_act,
    perm2_act,
    unknowns_in,
    var,
)

N = NameSort("n")
M = NameSort("m")
D = BaseSort("d")

SIG = Signature.make(
    [N, M],
    [D],
    [
        ("pair", TupleSort((D, D)), D),
        ("bind", AbsSort(N, D), D),
        ("bindm", AbsSort(M, D), D),
        ("vn", N, D),
        ("vm", M, D),
        ("unit", TupleSort(()), D),
    ],
    [("Pd", D), ("Rel", TupleSort((D, D))), ("Pn", N)],
)

ALL_SORTS = [N, M]


def below(*exceptions: Atom) -> AtomSet:
    return AtomSet.below(ALL_SORTS, exceptions)


POOL_D = [
    Unknown("U", D, below()),
    Unknown("U1", D, below(Atom(N, 0))),
    Unknown("U2", D, below(Atom(N, -1))),
    Unknown("U3", D, below(Atom(M, 1), Atom(N, 0))),
]
POOL_N = [
    Unknown("V", N, below()),
    Unknown("V1", N, below(Atom(N, 0))),
]
POOL = {D: POOL_D, N: POOL_N}


def random_perm(rng: random.Random, max_swaps=6, shift_range=3, index_range=4,
                sorts=ALL_SORTS) -> Perm:
    p = Perm.identity()
    for _ in range(rng.randint(0, max_swaps)):
        sort = rng.choice(sorts)
        i = rng.randint(-index_range, index_range)
        j = rng.randint(-index_range, index_range)
        if i != j:
            p = perm_compose(p, Perm.swap(Atom(sort, i), Atom(sort, j)))
    for sort in sorts:
        k = rng.randint(-shift_range, shift_range)
        if k and rng.random() < 0.5:
            p = perm_compose(p, Perm.shift(sort, k))
    return p


def random_perm_ops(rng: random.Random, max_swaps=6, shift_range=3, index_range=4,
                    sorts=ALL_SORTS) -> list:
    """A permutation as a generator word (for the pointwise oracle)."""
    ops = []
    for _ in range(rng.randint(0, max_swaps)):
        sort = rng.choice(sorts)
        i = rng.randint(-index_range, index_range)
        j = rng.randint(-index_range, index_range)
        if i != j:
            ops.append(("swap", Atom(sort, i), Atom(sort, j)))
    for sort in sorts:
        k = rng.randint(-shift_range, shift_range)
        if k and rng.random() < 0.5:
            ops.append(("shift", sort, k))
    rng.shuffle(ops)
    return ops


def perm_of_ops(ops) -> Perm:
    p = Perm.identity()
    for op in ops:
        if op[0] == "swap":
            p = perm_compose(p, Perm.swap(op[1], op[2]))
        else:
            p = perm_compose(p, Perm.shift(op[1], op[2]))
    return p


def apply_ops(ops, a: Atom) -> Atom:
    """Fold the generator word right to left, as function composition."""
    for op in reversed(ops):
        if op[0] == "swap":
            _, x, y = op
            a = y if a == x else x if a == y else a
        else:
            _, sort, k = op
            if a.sort == sort:
                a = Atom(sort, a.index + k)
    return a


def random_atomset(rng: random.Random, permission=False) -> AtomSet:
    exceptions = []
    for _ in range(rng.randint(0, 3)):
        sort = rng.choice(ALL_SORTS)
        exceptions.append(Atom(sort, rng.randint(-4, 4)))
    if permission or rng.random() < 0.7:
        return below(*set(exceptions))
    return AtomSet.finite(exceptions)


def random_atom(rng: random.Random, sort=None, index_range=4) -> Atom:
    return Atom(sort or rng.choice(ALL_SORTS), rng.randint(-index_range, index_range))


def random_term(rng: random.Random, sort=D, depth=4):
    if isinstance(sort, NameSort):
        return TAtom(random_atom(rng, sort))
    if isinstance(sort, TupleSort):
        return Tuple_(tuple(random_term(rng, s, depth - 1) for s in sort.items))
    if isinstance(sort, AbsSort):
        return Abs(random_atom(rng, sort.binder), random_term(rng, sort.body, depth - 1))
    choices = ["mod", "vn", "vm", "unit"]
    if depth > 0:
        choices += ["pair", "bind", "bindm", "pair"]
    match rng.choice(choices):
        case "mod":
            x = rng.choice(POOL_D)
            p = random_perm(rng, max_swaps=2, shift_range=1) if rng.random() < 0.5 else Perm.identity()
            return Mod(p, x)
        case "vn":
            return App("vn", TAtom(random_atom(rng, N)))
        case "vm":
            return App("vm", TAtom(random_atom(rng, M)))
        case "unit":
            return App("unit", Tuple_(()))
        case "pair":
            return App("pair", Tuple_((random_term(rng, D, depth - 1),
                                       random_term(rng, D, depth - 1))))
        case "bind":
            return App("bind", Abs(random_atom(rng, N), random_term(rng, D, depth - 1)))
        case "bindm":
            return App("bindm", Abs(random_atom(rng, M), random_term(rng, D, depth - 1)))


def random_prop(rng: random.Random, depth=3):
    if depth <= 0 or rng.random() < 0.3:
        match rng.choice(["bot", "pd", "pn", "rel"]):
            case "bot":
                return Bot()
            case "pd":
                return Pred("Pd", random_term(rng, D, 2))
            case "pn":
                return Pred("Pn", TAtom(random_atom(rng, N)))
            case "rel":
                return Pred("Rel", Tuple_((random_term(rng, D, 1),
                                           random_term(rng, D, 1))))
    match rng.choice(["imp", "forall", "imp"]):
        case "imp":
            return Imp(random_prop(rng, depth - 1), random_prop(rng, depth - 1))
        case "forall":
            x = rng.choice(POOL_D + POOL_N)
            return Forall(x, random_prop(rng, depth - 1))


def random_permitted_term(rng: random.Random, x: Unknown, depth=3, tries=25):
    """A term of the sort of ``x`` whose free atoms fit its permission set."""
    for _ in range(tries):
        if isinstance(x.sort, NameSort):
            a = Atom(x.sort, rng.randint(-4, -1))
            t = TAtom(a)
        else:
            t = random_term(rng, x.sort, depth)
        if set_subset(fa(t), x.pmss):
            return t
    return var(x) if not isinstance(x.sort, NameSort) else TAtom(Atom(x.sort, -5))


def random_substitution(rng: random.Random, max_entries=2) -> Substitution:
    mapping = {}
    for _ in range(rng.randint(0, max_entries)):
        x = rng.choice(POOL_D)
        mapping[x] = random_permitted_term(rng, x, depth=2)
    return Substitution.make(mapping)


# ---------------------------------------------------------------------------
# Alpha-variants: rebuild a term into a distinct but equivalent tree

def _fresh_atom_for(rng, sort, avoid: set[Atom]) -> Atom:
    candidates = [Atom(sort, i) for i in range(-6, 7) if Atom(sort, i) not in avoid]
    return rng.choice(candidates)


def alpha_variant(rng: random.Random, t):
    match t:
        case TAtom(_) | Bot():
            return t
        case Tuple_(items):
            return Tuple_(tuple(alpha_variant(rng, r) for r in items))
        case App(f, arg):
            return App(f, alpha_variant(rng, arg))
        case Pred(f, arg):
            return Pred(f, alpha_variant(rng, arg))
        case Imp(l, r):
            return Imp(alpha_variant(rng, l), alpha_variant(rng, r))
        case Abs(a, body):
            body2 = alpha_variant(rng, body)
            if rng.random() < 0.6:
                support = fa(body)
                taken = {x for x in (Atom(a.sort, i) for i in range(-6, 7))
                         if support.member(x)}
                b = _fresh_atom_for(rng, a.sort, taken | {a})
                return Abs(b, perm1_act(Perm.swap(b, a), body2))
            return Abs(a, body2)
        case Mod(p, x):
            if rng.random() < 0.6:
                # multiply by a swap of two atoms outside the permission set
                sort = rng.choice(ALL_SORTS)
                outside = [c for c in (Atom(sort, i) for i in range(0, 9))
                           if not x.pmss.member(c)]
                if len(outside) >= 2:
                    c, d = rng.sample(outside, 2)
                    return Mod(perm_compose(p, Perm.swap(c, d)), x)
            return t
        case Forall(x, body):
            body2 = alpha_variant(rng, body)
            if rng.random() < 0.5:
                names = {u.name for u in unknowns_in(body)} | {x.name}
                x2 = fresh_unknown(x, names)
                return Forall(x2, perm2_act(Perm2.swap(x, x2), body2))
            return Forall(x, body2)
    raise TypeError(f"cannot vary {t!r}")


# ---------------------------------------------------------------------------
# Random checked derivations

def _random_side(rng, n) -> list:
    return [random_prop(rng, 2) for _ in range(n)]


def random_axiom_leaf(rng: random.Random) -> Derivation:
    phi = random_prop(rng, 2)
    p = random_perm(rng, max_swaps=2, shift_range=1)
    left = _random_side(rng, rng.randint(0, 2)) + [phi]
    right = _random_side(rng, rng.randint(0, 2)) + [perm1_act(p, phi)]
    rng.shuffle(left)
    rng.shuffle(right)
    return ax(Sequent.make(left, right), phi, p)


def random_bot_leaf(rng: random.Random) -> Derivation:
    left = _random_side(rng, rng.randint(0, 2)) + [Bot()]
    right = _random_side(rng, rng.randint(0, 2))
    rng.shuffle(left)
    return bot_l(Sequent.make(left, right))


def _extend_imp_r(rng, d: Derivation):
    L, R = d.conclusion.left, d.conclusion.right
    if not L or not R:
        return None
    phi, psi = rng.choice(L), rng.choice(R)
    keep_phi = rng.random() < 0.3
    new_left = L if keep_phi else seq_remove(L, phi)
    new_right = seq_add(seq_remove(R, psi), [Imp(phi, psi)])
    return imp_r(Sequent(new_left, new_right), phi, psi, d)


def _extend_forall_r(rng, d: Derivation):
    R = d.conclusion.right
    if not R:
        return None
    psi = rng.choice(R)
    x = rng.choice(POOL_D + POOL_N)
    others = set()
    for q in list(d.conclusion.left) + list(seq_remove(R, psi)):
        others |= fv(q)
    if x in others:
        return None
    new_right = seq_add(seq_remove(R, psi), [Forall(x, psi)])
    return forall_r(Sequent(d.conclusion.left, new_right), x, psi, d)


def _subterms_of_sort(t, want):
    """Typed subterm collection over the test signature."""
    out = []

    def go(node, sort):
        if sort == want:
            out.append(node)
        match node:
            case Tuple_(items):
                assert isinstance(sort, TupleSort)
                for r, s in zip(items, sort.items):
                    go(r, s)
            case App(f, arg):
                arg_sort, _ = SIG.term_former(f)
                go(arg, arg_sort)
            case Abs(a, body):
                assert isinstance(sort, AbsSort)
                go(body, sort.body)
            case _:
                pass

    def go_prop(p):
        match p:
            case Pred(f, arg):
                go(arg, SIG.prop_former(f))
            case Imp(l, r):
                go_prop(l)
                go_prop(r)
            case Forall(_, body):
                go_prop(body)
            case _:
                pass

    go_prop(t)
    return out


def _replace_equal(t, old, new, rng):
    if t == old and rng.random() < 0.8:
        return new
    match t:
        case Tuple_(items):
            return Tuple_(tuple(_replace_equal(r, old, new, rng) for r in items))
        case App(f, arg):
            return App(f, _replace_equal(arg, old, new, rng))
        case Abs(a, body):
            return Abs(a, _replace_equal(body, old, new, rng))
        case Pred(f, arg):
            return Pred(f, _replace_equal(arg, old, new, rng))
        case Imp(l, r):
            return Imp(_replace_equal(l, old, new, rng),
                       _replace_equal(r, old, new, rng))
        case Forall(x, body):
            return Forall(x, _replace_equal(body, old, new, rng))
        case _:
            return t


_GEN_COUNTER = [0]


def _extend_forall_l(rng, d: Derivation):
    L = d.conclusion.left
    if not L:
        return None
    chi = rng.choice(L)
    subterms = _subterms_of_sort(chi, D)
    if not subterms:
        return None
    r0 = rng.choice(subterms)
    pmss = set_union(below(), fa(r0))
    _GEN_COUNTER[0] += 1
    x = Unknown(f"G{_GEN_COUNTER[0]}", D, pmss)
    body = _replace_equal(chi, r0, var(x), rng)
    inst = subst_apply(subst_single(x, r0), body)
    if not alpha_eq(inst, chi):
        return None
    new_left = seq_add(seq_remove(L, chi), [Forall(x, body)])
    keep = rng.random() < 0.3
    if keep:
        new_left = seq_add(new_left, [chi])
    return forall_l(Sequent(new_left, d.conclusion.right), x, body, r0, d)


def _combine_imp_l(rng, d1: Derivation, d2: Derivation):
    if not d1.conclusion.right or not d2.conclusion.left:
        return None
    phi = rng.choice(d1.conclusion.right)
    psi = rng.choice(d2.conclusion.left)
    ctx_l = seq_add(d1.conclusion.left, seq_remove(d2.conclusion.left, psi))
    ctx_r = seq_add(seq_remove(d1.conclusion.right, phi), d2.conclusion.right)
    p1 = weaken_to(d1, ctx_l, seq_add(ctx_r, [phi]))
    p2 = weaken_to(d2, seq_add(ctx_l, [psi]), ctx_r)
    concl = Sequent(seq_add(ctx_l, [Imp(phi, psi)]), ctx_r)
    return imp_l(concl, phi, psi, p1, p2)


def _combine_cut(rng, d1: Derivation, d2: Derivation):
    if not d1.conclusion.right or not d2.conclusion.left:
        return None
    f = rng.choice(d1.conclusion.right)
    ctx_l = seq_add(d1.conclusion.left, seq_remove(d2.conclusion.left, f))
    ctx_r = seq_add(seq_remove(d1.conclusion.right, f), d2.conclusion.right)
    p1 = weaken_to(d1, ctx_l, seq_add(ctx_r, [f]))
    p2 = weaken_to(d2, seq_add(ctx_l, [f]), ctx_r)
    return cut(Sequent(ctx_l, ctx_r), f, p1, p2)


def random_derivation(rng: random.Random, depth=3, allow_cut=False) -> Derivation:
    if depth <= 0:
        return random_axiom_leaf(rng) if rng.random() < 0.85 else random_bot_leaf(rng)
    d = random_derivation(rng, depth - 1, allow_cut)
    moves = ["imp_r", "forall_r", "forall_l", "imp_l", "weaken"]
    if allow_cut:
        moves.append("cut")
    rng.shuffle(moves)
    for move in moves:
        out = None
        if move == "imp_r":
            out = _extend_imp_r(rng, d)
        elif move == "forall_r":
            out = _extend_forall_r(rng, d)
        elif move == "forall_l":
            out = _extend_forall_l(rng, d)
        elif move == "imp_l":
            out = _combine_imp_l(rng, d, random_derivation(rng, depth - 1, allow_cut))
        elif move == "cut":
            out = _combine_cut(rng, d, random_derivation(rng, depth - 1, allow_cut))
        elif move == "weaken" and rng.random() < 0.4:
            out = weaken(d, [random_prop(rng, 1)], [random_prop(rng, 1)])
        if out is not None:
            return out
    return d


def random_cut_derivation(rng: random.Random, n_cuts: int) -> Derivation:
    """A checked derivation containing up to ``n_cuts`` cut nodes."""
    d = random_derivation(rng, rng.randint(1, 2), allow_cut=False)
    for _ in range(n_cuts):
        other = random_derivation(rng, rng.randint(1, 2), allow_cut=False)
        c = _combine_cut(rng, other, d) if rng.random() < 0.5 else _combine_cut(rng, d, other)
        if c is not None:
            d = c
        ext = rng.choice([_extend_imp_r, _extend_forall_r, _extend_forall_l, None])
        if ext is not None:
            out = ext(rng, d)
            if out is not None:
                d = out
    return d
