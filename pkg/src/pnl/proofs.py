"""Sequents, explicit derivation trees, the rule checker, and the
derivation transformers culminating in cut elimination.

Sequent sides are stored as lists but treated as sets modulo
alpha-equivalence; rules locate formulas by alpha-search.  A rule node
records every parameter the checker needs (the axiom permutation, the
universal witness, the cut formula), so checking never searches for
instantiations.

Context matching is deliberately liberal: a premise may keep a copy of
the principal formula in its context (the set reading of the rule
schemas), which is what lets the cut-elimination commuting steps work
purely by weakening.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .atoms import Perm, perm_compose, perm_inverse, set_subset
from .syntax import (
    Bot,
    Forall,
    Imp,
    Perm2,
    Pred,
    Prop,
    Signature,
    Term,
    Unknown,
    alpha_eq,
    fa,
    fresh_unknown,
    fv,
    perm1_act,
    perm2_act,
    prop_size,
    typecheck_prop,
    typecheck_term,
    unknowns_in,
)
from .subst import Substitution, nontriv_subst, subst_apply, subst_single


# ---------------------------------------------------------------------------
# Sequents as alpha-sets

@dataclass(frozen=True)
class Sequent:
    left: tuple[Prop, ...]
    right: tuple[Prop, ...]

    @staticmethod
    def make(left: Iterable[Prop], right: Iterable[Prop]) -> "Sequent":
        return Sequent(tuple(left), tuple(right))

    def __repr__(self):
        l = ", ".join(map(str, self.left))
        r = ", ".join(map(str, self.right))
        return f"{l} |- {r}"


def seq_member(p: Prop, side: tuple[Prop, ...]) -> bool:
    return any(alpha_eq(p, q) for q in side)


def seq_add(side: tuple[Prop, ...], extra: Iterable[Prop]) -> tuple[Prop, ...]:
    out = list(side)
    for p in extra:
        if not seq_member(p, tuple(out)):
            out.append(p)
    return tuple(out)


def seq_remove(side: tuple[Prop, ...], p: Prop) -> tuple[Prop, ...]:
    return tuple(q for q in side if not alpha_eq(p, q))


def seq_subset(a: tuple[Prop, ...], b: tuple[Prop, ...]) -> bool:
    return all(seq_member(p, b) for p in a)


def seq_eq(a: tuple[Prop, ...], b: tuple[Prop, ...]) -> bool:
    return seq_subset(a, b) and seq_subset(b, a)


def sequent_eq(s1: Sequent, s2: Sequent) -> bool:
    return seq_eq(s1.left, s2.left) and seq_eq(s1.right, s2.right)


def fv_side(side: tuple[Prop, ...]) -> set[Unknown]:
    out: set[Unknown] = set()
    for p in side:
        out |= fv(p)
    return out


# ---------------------------------------------------------------------------
# Derivations

AX, BOT_L, IMP_L, IMP_R, FORALL_L, FORALL_R, CUT = (
    "ax", "botL", "impL", "impR", "forallL", "forallR", "cut",
)

_ARITY = {AX: 0, BOT_L: 0, IMP_L: 2, IMP_R: 1, FORALL_L: 1, FORALL_R: 1, CUT: 2}


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: Sequent
    premises: tuple["Derivation", ...] = ()
    formula: Optional[Prop] = None    # ax principal (left copy) / cut formula
    perm: Optional[Perm] = None       # ax
    phi: Optional[Prop] = None        # impL / impR
    psi: Optional[Prop] = None
    unknown: Optional[Unknown] = None  # forallL / forallR
    body: Optional[Prop] = None
    witness: Optional[Term] = None    # forallL

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def height(self) -> int:
        return 1 + max((p.height() for p in self.premises), default=0)

    def count_cuts(self) -> int:
        return (self.rule == CUT) + sum(p.count_cuts() for p in self.premises)

    def is_cut_free(self) -> bool:
        return self.count_cuts() == 0

    def nodes(self):
        yield self
        for p in self.premises:
            yield from p.nodes()


def ax(conclusion: Sequent, formula: Prop, perm: Perm) -> Derivation:
    return Derivation(AX, conclusion, (), formula=formula, perm=perm)


def bot_l(conclusion: Sequent) -> Derivation:
    return Derivation(BOT_L, conclusion)


def imp_l(conclusion: Sequent, phi: Prop, psi: Prop, p1: Derivation, p2: Derivation) -> Derivation:
    return Derivation(IMP_L, conclusion, (p1, p2), phi=phi, psi=psi)


def imp_r(conclusion: Sequent, phi: Prop, psi: Prop, p: Derivation) -> Derivation:
    return Derivation(IMP_R, conclusion, (p,), phi=phi, psi=psi)


def forall_l(conclusion: Sequent, x: Unknown, body: Prop, witness: Term, p: Derivation) -> Derivation:
    return Derivation(FORALL_L, conclusion, (p,), unknown=x, body=body, witness=witness)


def forall_r(conclusion: Sequent, x: Unknown, body: Prop, p: Derivation) -> Derivation:
    return Derivation(FORALL_R, conclusion, (p,), unknown=x, body=body)


def cut(conclusion: Sequent, formula: Prop, p_right: Derivation, p_left: Derivation) -> Derivation:
    """Cut node; ``p_right`` derives the premise with the cut formula on
    the right, ``p_left`` the one with it on the left."""
    return Derivation(CUT, conclusion, (p_right, p_left), formula=formula)


def derivation_unknown_names(d: Derivation) -> set[str]:
    out: set[str] = set()
    for node in d.nodes():
        for side in (node.conclusion.left, node.conclusion.right):
            for p in side:
                out |= {x.name for x in unknowns_in(p)}
        for f in (node.formula, node.phi, node.psi, node.body, node.witness):
            if f is not None:
                out |= {x.name for x in unknowns_in(f)}
        if node.unknown is not None:
            out.add(node.unknown.name)
    return out


# ---------------------------------------------------------------------------
# The Figure-style rule checker

def check(sig: Signature, d: Derivation) -> list[str]:
    """Verify every node of the derivation; [] means the derivation is valid.

    Each error names its node by premise path and the violated condition.
    """
    errors: list[str] = []
    _check_node(sig, d, "root", errors)
    return errors


def check_ok(sig: Signature, d: Derivation) -> bool:
    return not check(sig, d)


class CheckError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _typecheck_side(sig, side, where, errors):
    for p in side:
        try:
            typecheck_prop(sig, p)
        except Exception as e:
            errors.append(f"{where}: ill-sorted proposition {p}: {e}")


def _check_node(sig: Signature, d: Derivation, path: str, errors: list[str]) -> None:
    L, R = d.conclusion.left, d.conclusion.right
    _typecheck_side(sig, L, path, errors)
    _typecheck_side(sig, R, path, errors)
    if d.rule not in _ARITY:
        errors.append(f"{path}: unknown rule {d.rule!r}")
        return
    if len(d.premises) != _ARITY[d.rule]:
        errors.append(
            f"{path}: {d.rule} takes {_ARITY[d.rule]} premises, got {len(d.premises)}"
        )
        return

    if d.rule == AX:
        if d.formula is None or d.perm is None:
            errors.append(f"{path}: ax needs a principal formula and a permutation")
            return
        if not seq_member(d.formula, L):
            errors.append(f"{path}: ax: principal formula not on the left")
        if not seq_member(perm1_act(d.perm, d.formula), R):
            errors.append(f"{path}: ax: right formula is not the permuted principal")
        return

    if d.rule == BOT_L:
        if not seq_member(Bot(), L):
            errors.append(f"{path}: botL: no falsity on the left")
        return

    if d.rule == IMP_L:
        p = Imp(d.phi, d.psi)
        if not seq_member(p, L):
            errors.append(f"{path}: impL: principal implication not on the left")
            return
        p1, p2 = d.premises
        ctx = p1.conclusion.left
        if not (seq_subset(seq_remove(L, p), ctx) and seq_subset(ctx, L)):
            errors.append(f"{path}: impL: first premise left context mismatch")
        if not seq_eq(p1.conclusion.right, seq_add(R, [d.phi])):
            errors.append(f"{path}: impL: first premise right side mismatch")
        if not seq_eq(p2.conclusion.left, seq_add(ctx, [d.psi])):
            errors.append(f"{path}: impL: second premise left side mismatch")
        if not seq_eq(p2.conclusion.right, R):
            errors.append(f"{path}: impL: second premise right side mismatch")

    elif d.rule == IMP_R:
        p = Imp(d.phi, d.psi)
        if not seq_member(p, R):
            errors.append(f"{path}: impR: principal implication not on the right")
            return
        (p1,) = d.premises
        if not seq_eq(p1.conclusion.left, seq_add(L, [d.phi])):
            errors.append(f"{path}: impR: premise left side mismatch")
        want_a = seq_add(seq_remove(R, p), [d.psi])
        want_b = seq_add(R, [d.psi])
        if not (seq_eq(p1.conclusion.right, want_a) or seq_eq(p1.conclusion.right, want_b)):
            errors.append(f"{path}: impR: premise right side mismatch")

    elif d.rule == FORALL_L:
        x, body, w = d.unknown, d.body, d.witness
        p = Forall(x, body)
        if not seq_member(p, L):
            errors.append(f"{path}: forallL: principal quantification not on the left")
            return
        try:
            got = typecheck_term(sig, w)
            if got != x.sort:
                errors.append(
                    f"{path}: forallL: witness sort {got} differs from sort of {x.name}"
                )
                return
        except Exception as e:
            errors.append(f"{path}: forallL: ill-sorted witness: {e}")
            return
        if not set_subset(fa(w), x.pmss):
            errors.append(
                f"{path}: forallL: permission side condition fa(witness) not within pmss({x.name})"
            )
            return
        inst = subst_apply(subst_single(x, w), body)
        (p1,) = d.premises
        want_a = seq_add(seq_remove(L, p), [inst])
        want_b = seq_add(L, [inst])
        if not (seq_eq(p1.conclusion.left, want_a) or seq_eq(p1.conclusion.left, want_b)):
            errors.append(f"{path}: forallL: premise does not contain the instantiated body")
        if not seq_eq(p1.conclusion.right, R):
            errors.append(f"{path}: forallL: premise right side mismatch")

    elif d.rule == FORALL_R:
        x, body = d.unknown, d.body
        p = Forall(x, body)
        if not seq_member(p, R):
            errors.append(f"{path}: forallR: principal quantification not on the right")
            return
        stale = fv_side(L) | fv_side(seq_remove(R, p))
        if x in stale:
            errors.append(
                f"{path}: forallR: side condition violated, {x.name} is free in the conclusion context"
            )
        (p1,) = d.premises
        if not seq_eq(p1.conclusion.left, L):
            errors.append(f"{path}: forallR: premise left side mismatch")
        want_a = seq_add(seq_remove(R, p), [body])
        want_b = seq_add(R, [body])
        if not (seq_eq(p1.conclusion.right, want_a) or seq_eq(p1.conclusion.right, want_b)):
            errors.append(f"{path}: forallR: premise does not expose the body")

    elif d.rule == CUT:
        f = d.formula
        if f is None:
            errors.append(f"{path}: cut needs its cut formula")
            return
        p1, p2 = d.premises
        if not seq_eq(p1.conclusion.left, L):
            errors.append(f"{path}: cut: first premise left side mismatch")
        if not seq_eq(p1.conclusion.right, seq_add(R, [f])):
            errors.append(f"{path}: cut: first premise must show the cut formula on the right")
        if not seq_eq(p2.conclusion.left, seq_add(L, [f])):
            errors.append(f"{path}: cut: second premise must assume the cut formula on the left")
        if not seq_eq(p2.conclusion.right, R):
            errors.append(f"{path}: cut: second premise right side mismatch")

    for i, prem in enumerate(d.premises):
        _check_node(sig, prem, f"{path}.{i}", errors)


# ---------------------------------------------------------------------------
# Whole-derivation permutation actions

def deriv_perm2(pp: Perm2, d: Derivation) -> Derivation:
    """Apply a level-2 permutation throughout a derivation."""
    if pp.is_identity():
        return d

    def go_side(side):
        return tuple(perm2_act(pp, p) for p in side)

    return Derivation(
        rule=d.rule,
        conclusion=Sequent(go_side(d.conclusion.left), go_side(d.conclusion.right)),
        premises=tuple(deriv_perm2(pp, p) for p in d.premises),
        formula=None if d.formula is None else perm2_act(pp, d.formula),
        perm=d.perm,
        phi=None if d.phi is None else perm2_act(pp, d.phi),
        psi=None if d.psi is None else perm2_act(pp, d.psi),
        unknown=None if d.unknown is None else pp.apply(d.unknown),
        body=None if d.body is None else perm2_act(pp, d.body),
        witness=None if d.witness is None else perm2_act(pp, d.witness),
    )


def deriv_perm1(p: Perm, d: Derivation) -> Derivation:
    """Apply a level-1 permutation throughout a derivation.

    Axiom permutations are conjugated; universal witnesses are untouched
    because the level-1 action commutes with level-2 substitution.
    """
    if p.is_identity():
        return d

    def go_side(side):
        return tuple(perm1_act(p, q) for q in side)

    new_perm = d.perm
    if d.rule == AX:
        new_perm = perm_compose(perm_compose(p, d.perm), perm_inverse(p))
    return Derivation(
        rule=d.rule,
        conclusion=Sequent(go_side(d.conclusion.left), go_side(d.conclusion.right)),
        premises=tuple(deriv_perm1(p, q) for q in d.premises),
        formula=None if d.formula is None else perm1_act(p, d.formula),
        perm=new_perm,
        phi=None if d.phi is None else perm1_act(p, d.phi),
        psi=None if d.psi is None else perm1_act(p, d.psi),
        unknown=d.unknown,
        body=None if d.body is None else perm1_act(p, d.body),
        witness=d.witness,
    )


# ---------------------------------------------------------------------------
# Weakening

def weaken(d: Derivation, add_left: Iterable[Prop] = (), add_right: Iterable[Prop] = ()) -> Derivation:
    """Add formulas to both sides of every sequent of the derivation.

    Quantifier-right binders clashing with free unknowns of the additions
    are renamed first, so the result checks whenever the input does.
    """
    add_left, add_right = tuple(add_left), tuple(add_right)
    if not add_left and not add_right:
        return d
    added_fv: set[Unknown] = set()
    for p in add_left + add_right:
        added_fv |= fv(p)
    return _weaken(d, add_left, add_right, added_fv)


def weaken_to(d: Derivation, left: tuple[Prop, ...], right: tuple[Prop, ...]) -> Derivation:
    """Weaken until the conclusion covers the given sequent sides."""
    add_l = tuple(p for p in left if not seq_member(p, d.conclusion.left))
    add_r = tuple(p for p in right if not seq_member(p, d.conclusion.right))
    return weaken(d, add_l, add_r)


def _weaken(d: Derivation, add_l, add_r, added_fv: set[Unknown]) -> Derivation:
    if d.rule == FORALL_R and d.unknown in added_fv:
        avoid = derivation_unknown_names(d) | {x.name for x in added_fv}
        x2 = fresh_unknown(d.unknown, avoid)
        swap = Perm2.swap(d.unknown, x2)
        d = Derivation(
            rule=FORALL_R,
            conclusion=d.conclusion,
            premises=(deriv_perm2(swap, d.premises[0]),),
            unknown=x2,
            body=perm2_act(swap, d.body),
        )
    conclusion = Sequent(
        seq_add(d.conclusion.left, add_l), seq_add(d.conclusion.right, add_r)
    )
    premises = tuple(_weaken(p, add_l, add_r, added_fv) for p in d.premises)
    return replace(d, conclusion=conclusion, premises=premises)


# ---------------------------------------------------------------------------
# Instantiation of a free unknown throughout a derivation

class TransformError(Exception):
    pass


def instantiate(d: Derivation, x: Unknown, r: Term, sig: Optional[Signature] = None) -> Derivation:
    """Substitute ``[x := r]`` through a derivation.

    Needs fa(r) within pmss(x) and r of the sort of x; bound unknowns of
    the derivation clashing with the substitution are freshened first.
    The result derives the pointwise-substituted conclusion and checks
    whenever the input does.
    """
    theta = subst_single(x, r, sig)
    if not theta.graph:
        return d
    bad = nontriv_subst(theta)
    avoid = derivation_unknown_names(d) | {y.name for y in bad}
    avoid |= {y.name for y in unknowns_in(r)}
    d = _freshen_binders(d, bad, avoid)
    return _subst_deriv(d, theta)


def _freshen_binders(d: Derivation, bad: set[Unknown], avoid: set[str]) -> Derivation:
    if d.rule == FORALL_R and d.unknown in bad:
        x2 = fresh_unknown(d.unknown, avoid | derivation_unknown_names(d))
        swap = Perm2.swap(d.unknown, x2)
        d = Derivation(
            rule=FORALL_R,
            conclusion=d.conclusion,
            premises=(deriv_perm2(swap, d.premises[0]),),
            unknown=x2,
            body=perm2_act(swap, d.body),
        )
    elif d.rule == FORALL_L and d.unknown in bad:
        local_avoid = avoid | {y.name for y in unknowns_in(d.body)}
        if d.witness is not None:
            local_avoid |= {y.name for y in unknowns_in(d.witness)}
        x2 = fresh_unknown(d.unknown, local_avoid)
        d = replace(d, unknown=x2, body=perm2_act(Perm2.swap(d.unknown, x2), d.body))
    premises = tuple(_freshen_binders(p, bad, avoid) for p in d.premises)
    return replace(d, premises=premises)


def _subst_deriv(d: Derivation, theta: Substitution) -> Derivation:
    def go(p):
        return None if p is None else subst_apply(theta, p)

    return Derivation(
        rule=d.rule,
        conclusion=Sequent(
            tuple(subst_apply(theta, p) for p in d.conclusion.left),
            tuple(subst_apply(theta, p) for p in d.conclusion.right),
        ),
        premises=tuple(_subst_deriv(p, theta) for p in d.premises),
        formula=go(d.formula),
        perm=d.perm,
        phi=go(d.phi),
        psi=go(d.psi),
        unknown=d.unknown,
        body=go(d.body),
        witness=go(d.witness),
    )


# ---------------------------------------------------------------------------
# Permuting a single formula of the conclusion

def permute_formula(d: Derivation, side: str, chi: Prop, p: Perm) -> Derivation:
    """Replace ``chi`` by its image under ``p`` on one side of the conclusion.

    Implements the simultaneous-induction transformation: the tree shape
    is preserved, axiom permutations absorb ``p``, and universal witnesses
    are reused unchanged.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    cur = d.conclusion.left if side == "left" else d.conclusion.right
    if not seq_member(chi, cur):
        raise TransformError(f"formula {chi} does not occur on the {side}")
    return _permute(d, side, chi, p)


def _retarget(d: Derivation, side: str, chi: Prop, p: Perm) -> Sequent:
    new_chi = perm1_act(p, chi)
    if side == "left":
        return Sequent(
            seq_add(seq_remove(d.conclusion.left, chi), [new_chi]), d.conclusion.right
        )
    return Sequent(
        d.conclusion.left, seq_add(seq_remove(d.conclusion.right, chi), [new_chi])
    )


def _side_of(d: Derivation, side: str) -> tuple[Prop, ...]:
    return d.conclusion.left if side == "left" else d.conclusion.right


def _ctx_change(prem: Derivation, side: str, chi: Prop, p: Perm, aux: list[Prop]) -> Derivation:
    """Propagate a context replacement into a premise.

    When the replaced formula collides with a formula the rule re-adds to
    that premise side, the copy must survive, so the image is weakened in
    instead.
    """
    if any(alpha_eq(chi, a) for a in aux):
        img = perm1_act(p, chi)
        return weaken(prem, [img] if side == "left" else [],
                      [img] if side == "right" else [])
    if seq_member(chi, _side_of(prem, side)):
        return _permute(prem, side, chi, p)
    return prem


def _aux_change(prem: Derivation, side: str, old: Prop, p: Perm, preserved: tuple[Prop, ...]) -> Derivation:
    """Replace a rule-introduced formula of a premise by its image, keeping
    the original when it also lives on in the conclusion context."""
    img = perm1_act(p, old)
    if seq_member(old, preserved):
        return weaken(prem, [img] if side == "left" else [],
                      [img] if side == "right" else [])
    if seq_member(old, _side_of(prem, side)):
        return _permute(prem, side, old, p)
    return prem


def _kleene_principal(prem: Derivation, side: str, prin: Prop, p: Perm) -> Derivation:
    if seq_member(prin, _side_of(prem, side)):
        return _permute(prem, side, prin, p)
    return prem


def _permute(d: Derivation, side: str, chi: Prop, p: Perm) -> Derivation:
    new_chi = perm1_act(p, chi)
    if alpha_eq(new_chi, chi):
        return d
    target = _retarget(d, side, chi, p)
    L, R = d.conclusion.left, d.conclusion.right

    if d.rule == AX:
        f, q = d.formula, d.perm
        if side == "left" and alpha_eq(chi, f):
            return ax(target, new_chi, perm_compose(q, perm_inverse(p)))
        if side == "right" and alpha_eq(chi, perm1_act(q, f)):
            return ax(target, f, perm_compose(p, q))
        return ax(target, f, q)

    if d.rule == BOT_L:
        return bot_l(target)

    if d.rule == IMP_R:
        prin = Imp(d.phi, d.psi)
        (prem,) = d.premises
        if side == "right" and alpha_eq(chi, prin):
            prem = _aux_change(prem, "left", d.phi, p, target.left)
            prem = _aux_change(prem, "right", d.psi, p,
                               seq_remove(target.right, perm1_act(p, prin)))
            prem = _kleene_principal(prem, "right", prin, p)
            return imp_r(target, perm1_act(p, d.phi), perm1_act(p, d.psi), prem)
        prem = _ctx_change(prem, side, chi, p, [d.phi] if side == "left" else [d.psi])
        return imp_r(target, d.phi, d.psi, prem)

    if d.rule == IMP_L:
        prin = Imp(d.phi, d.psi)
        p1, p2 = d.premises
        if side == "left" and alpha_eq(chi, prin):
            p1 = _aux_change(p1, "right", d.phi, p, target.right)
            p1 = _kleene_principal(p1, "left", prin, p)
            p2 = _aux_change(p2, "left", d.psi, p,
                             seq_remove(target.left, perm1_act(p, prin)))
            p2 = _kleene_principal(p2, "left", prin, p)
            return imp_l(target, perm1_act(p, d.phi), perm1_act(p, d.psi), p1, p2)
        p1 = _ctx_change(p1, side, chi, p, [d.phi] if side == "right" else [])
        p2 = _ctx_change(p2, side, chi, p, [d.psi] if side == "left" else [])
        return imp_l(target, d.phi, d.psi, p1, p2)

    if d.rule == FORALL_L:
        prin = Forall(d.unknown, d.body)
        inst = subst_apply(subst_single(d.unknown, d.witness), d.body)
        (prem,) = d.premises
        if side == "left" and alpha_eq(chi, prin):
            prem = _aux_change(prem, "left", inst, p,
                               seq_remove(target.left, perm1_act(p, prin)))
            prem = _kleene_principal(prem, "left", prin, p)
            return forall_l(target, d.unknown, perm1_act(p, d.body), d.witness, prem)
        prem = _ctx_change(prem, side, chi, p, [inst] if side == "left" else [])
        return forall_l(target, d.unknown, d.body, d.witness, prem)

    if d.rule == FORALL_R:
        prin = Forall(d.unknown, d.body)
        (prem,) = d.premises
        if side == "right" and alpha_eq(chi, prin):
            prem = _aux_change(prem, "right", d.body, p,
                               seq_remove(target.right, perm1_act(p, prin)))
            prem = _kleene_principal(prem, "right", prin, p)
            return forall_r(target, d.unknown, perm1_act(p, d.body), prem)
        prem = _ctx_change(prem, side, chi, p, [d.body] if side == "right" else [])
        return forall_r(target, d.unknown, d.body, prem)

    if d.rule == CUT:
        p1, p2 = d.premises
        p1 = _ctx_change(p1, side, chi, p, [d.formula] if side == "right" else [])
        p2 = _ctx_change(p2, side, chi, p, [d.formula] if side == "left" else [])
        return cut(target, d.formula, p1, p2)

    raise TransformError(f"unknown rule {d.rule!r}")


# ---------------------------------------------------------------------------
# Cut elimination

def _persistence(d: Derivation, side: str, f: Prop) -> int:
    """Longest premise path along which the formula stays in the context."""
    if not seq_member(f, _side_of(d, side)):
        return 0
    if not d.premises:
        return 0
    return 1 + max(_persistence(p, side, f) for p in d.premises)


def cut_measure(d: Derivation) -> tuple[int, int]:
    """The lexicographic measure of a cut: connective size of the cut
    formula, then its combined persistence up the two branches."""
    if d.rule != CUT:
        raise TransformError("cut_measure expects a cut node")
    p1, p2 = d.premises
    return (
        prop_size(d.formula),
        _persistence(p1, "right", d.formula) + _persistence(p2, "left", d.formula),
    )


def _measure_of(fc: Prop, d_right: Derivation, d_left: Derivation) -> tuple[int, int]:
    return (
        prop_size(fc),
        _persistence(d_right, "right", fc) + _persistence(d_left, "left", fc),
    )


def _right_principal(d: Derivation) -> Optional[Prop]:
    if d.rule == AX:
        return perm1_act(d.perm, d.formula)
    if d.rule == IMP_R:
        return Imp(d.phi, d.psi)
    if d.rule == FORALL_R:
        return Forall(d.unknown, d.body)
    return None


def _left_principal(d: Derivation) -> Optional[Prop]:
    if d.rule == AX:
        return d.formula
    if d.rule == BOT_L:
        return Bot()
    if d.rule == IMP_L:
        return Imp(d.phi, d.psi)
    if d.rule == FORALL_L:
        return Forall(d.unknown, d.body)
    return None


def cut_eliminate(sig: Signature, d: Derivation, trace: Optional[list] = None) -> Derivation:
    """Rewrite a checked derivation into a cut-free one with an
    alpha-equal conclusion.

    ``trace``, when given, collects (parent measure, child measure) pairs
    for every auxiliary cut spawned while rewriting a cut; the child is
    always lexicographically smaller.
    """
    errs = check(sig, d)
    if errs:
        raise CheckError(errs)
    return _eliminate(d, trace)


def _eliminate(d: Derivation, trace) -> Derivation:
    premises = tuple(_eliminate(p, trace) for p in d.premises)
    d = replace(d, premises=premises)
    if d.rule != CUT:
        return d
    p1, p2 = d.premises
    return _remove_cut(d.conclusion, d.formula, p1, p2, trace, None)


def _spawn(concl, fc, d_right, d_left, trace, parent):
    """Recursive cut removal bookkeeping: record the measure edge."""
    m = _measure_of(fc, d_right, d_left)
    if trace is not None:
        trace.append((parent, m))
    return _remove_cut(concl, fc, d_right, d_left, trace, m)


def _remove_cut(concl: Sequent, fc: Prop, d1: Derivation, d2: Derivation,
                trace, self_measure) -> Derivation:
    """Produce a cut-free derivation of ``concl`` from cut-free premises
    ``d1`` of (L |- fc, R) and ``d2`` of (L, fc |- R)."""
    L, R = concl.left, concl.right
    if self_measure is None:
        self_measure = _measure_of(fc, d1, d2)

    # Absorbed cuts: the conclusion already carries the cut formula.
    if seq_member(fc, R):
        return d1
    if seq_member(fc, L):
        return d2

    # Axiom leaves resolve by permuting the matching copy.
    if d1.rule == AX:
        f, q = d1.formula, d1.perm
        if seq_member(perm1_act(q, f), R):
            return ax(concl, f, q)
        return permute_formula(d2, "left", fc, perm_inverse(q))
    if d2.rule == AX:
        f, q = d2.formula, d2.perm
        if seq_member(f, L):
            return ax(concl, f, q)
        return permute_formula(d1, "right", fc, q)

    rp = _right_principal(d1)
    if rp is None or not alpha_eq(rp, fc):
        return _commute_first(concl, fc, d1, d2, trace, self_measure)
    lp = _left_principal(d2)
    if lp is None or not alpha_eq(lp, fc):
        return _commute_second(concl, fc, d1, d2, trace, self_measure)
    return _essential(concl, fc, d1, d2, trace, self_measure)


def _commute_first(concl, fc, d1, d2, trace, m):
    """Push the cut above the last rule of the first (right-hand) branch."""
    L, R = concl.left, concl.right

    if d1.rule == BOT_L:
        return bot_l(concl)

    if d1.rule == IMP_L:
        phi, psi = d1.phi, d1.psi
        q1, q2 = d1.premises
        c1 = _spawn(
            Sequent(L, seq_add(R, [phi])), fc,
            weaken_to(q1, L, seq_add(seq_add(R, [phi]), [fc])),
            weaken_to(d2, seq_add(L, [fc]), seq_add(R, [phi])),
            trace, m,
        )
        c2 = _spawn(
            Sequent(seq_add(L, [psi]), R), fc,
            weaken_to(q2, seq_add(L, [psi]), seq_add(R, [fc])),
            weaken_to(d2, seq_add(seq_add(L, [psi]), [fc]), R),
            trace, m,
        )
        return imp_l(concl, phi, psi, c1, c2)

    if d1.rule == IMP_R:
        phi, psi = d1.phi, d1.psi
        (q1,) = d1.premises
        c = _spawn(
            Sequent(seq_add(L, [phi]), seq_add(R, [psi])), fc,
            weaken_to(q1, seq_add(L, [phi]), seq_add(seq_add(R, [psi]), [fc])),
            weaken_to(d2, seq_add(seq_add(L, [phi]), [fc]), seq_add(R, [psi])),
            trace, m,
        )
        return imp_r(concl, phi, psi, c)

    if d1.rule == FORALL_L:
        x, body, w = d1.unknown, d1.body, d1.witness
        inst = subst_apply(subst_single(x, w), body)
        (q1,) = d1.premises
        c = _spawn(
            Sequent(seq_add(L, [inst]), R), fc,
            weaken_to(q1, seq_add(L, [inst]), seq_add(R, [fc])),
            weaken_to(d2, seq_add(seq_add(L, [inst]), [fc]), R),
            trace, m,
        )
        return forall_l(concl, x, body, w, c)

    if d1.rule == FORALL_R:
        x, body = d1.unknown, d1.body
        (q1,) = d1.premises
        c = _spawn(
            Sequent(L, seq_add(R, [body])), fc,
            weaken_to(q1, L, seq_add(seq_add(R, [body]), [fc])),
            weaken_to(d2, seq_add(L, [fc]), seq_add(R, [body])),
            trace, m,
        )
        return forall_r(concl, x, body, c)

    raise TransformError(f"cannot commute cut over {d1.rule}")


def _commute_second(concl, fc, d1, d2, trace, m):
    """Push the cut above the last rule of the second (left-hand) branch."""
    L, R = concl.left, concl.right

    if d2.rule == BOT_L:
        return bot_l(concl)

    if d2.rule == IMP_L:
        phi, psi = d2.phi, d2.psi
        q1, q2 = d2.premises
        c1 = _spawn(
            Sequent(L, seq_add(R, [phi])), fc,
            weaken_to(d1, L, seq_add(seq_add(R, [phi]), [fc])),
            weaken_to(q1, seq_add(L, [fc]), seq_add(R, [phi])),
            trace, m,
        )
        c2 = _spawn(
            Sequent(seq_add(L, [psi]), R), fc,
            weaken_to(d1, seq_add(L, [psi]), seq_add(R, [fc])),
            weaken_to(q2, seq_add(seq_add(L, [psi]), [fc]), R),
            trace, m,
        )
        return imp_l(concl, phi, psi, c1, c2)

    if d2.rule == IMP_R:
        phi, psi = d2.phi, d2.psi
        (q1,) = d2.premises
        c = _spawn(
            Sequent(seq_add(L, [phi]), seq_add(R, [psi])), fc,
            weaken_to(d1, seq_add(L, [phi]), seq_add(seq_add(R, [psi]), [fc])),
            weaken_to(q1, seq_add(seq_add(L, [phi]), [fc]), seq_add(R, [psi])),
            trace, m,
        )
        return imp_r(concl, phi, psi, c)

    if d2.rule == FORALL_L:
        x, body, w = d2.unknown, d2.body, d2.witness
        inst = subst_apply(subst_single(x, w), body)
        (q1,) = d2.premises
        c = _spawn(
            Sequent(seq_add(L, [inst]), R), fc,
            weaken_to(d1, seq_add(L, [inst]), seq_add(R, [fc])),
            weaken_to(q1, seq_add(seq_add(L, [inst]), [fc]), R),
            trace, m,
        )
        return forall_l(concl, x, body, w, c)

    if d2.rule == FORALL_R:
        x, body = d2.unknown, d2.body
        (q1,) = d2.premises
        c = _spawn(
            Sequent(L, seq_add(R, [body])), fc,
            weaken_to(d1, L, seq_add(seq_add(R, [body]), [fc])),
            weaken_to(q1, seq_add(L, [fc]), seq_add(R, [body])),
            trace, m,
        )
        return forall_r(concl, x, body, c)

    raise TransformError(f"cannot commute cut over {d2.rule}")


def _clean_right_copy(concl_l, concl_r, fc, branch, other, trace, m):
    """Remove a lingering copy of the cut formula from the right of a
    premise-derived sequent, by a cut of smaller persistence."""
    if seq_member(fc, branch.conclusion.right):
        return _spawn(
            Sequent(concl_l, concl_r), fc,
            weaken_to(branch, concl_l, seq_add(concl_r, [fc])),
            weaken_to(other, seq_add(concl_l, [fc]), concl_r),
            trace, m,
        )
    return weaken_to(branch, concl_l, concl_r)


def _clean_left_copy(concl_l, concl_r, fc, branch, other, trace, m):
    if seq_member(fc, branch.conclusion.left):
        return _spawn(
            Sequent(concl_l, concl_r), fc,
            weaken_to(other, concl_l, seq_add(concl_r, [fc])),
            weaken_to(branch, seq_add(concl_l, [fc]), concl_r),
            trace, m,
        )
    return weaken_to(branch, concl_l, concl_r)


def _essential(concl, fc, d1, d2, trace, m):
    L, R = concl.left, concl.right

    if isinstance(fc, Imp):
        phi, psi = d2.phi, d2.psi  # alpha-equal to d1's by congruence
        (p1,) = d1.premises
        p2a, p2b = d2.premises
        # resolve copies of the cut formula persisting past its introduction
        p1c = _clean_right_copy(seq_add(L, [phi]), seq_add(R, [psi]), fc, p1, d2, trace, m)
        p2ac = _clean_left_copy(L, seq_add(R, [phi]), fc, p2a, d1, trace, m)
        p2bc = _clean_left_copy(seq_add(L, [psi]), R, fc, p2b, d1, trace, m)
        c1 = _spawn(
            Sequent(L, seq_add(R, [psi])), phi,
            weaken_to(p2ac, L, seq_add(seq_add(R, [psi]), [phi])),
            weaken_to(p1c, seq_add(L, [phi]), seq_add(R, [psi])),
            trace, m,
        )
        return _spawn(Sequent(L, R), psi, c1, p2bc, trace, m)

    if isinstance(fc, Forall):
        x1, b1 = d1.unknown, d1.body
        x2, b2, w = d2.unknown, d2.body, d2.witness
        inst = subst_apply(subst_single(x2, w), b2)
        (p1,) = d1.premises
        (p2,) = d2.premises
        p1c = _clean_right_copy(L, seq_add(R, [b1]), fc, p1, d2, trace, m)
        p2c = _clean_left_copy(seq_add(L, [inst]), R, fc, p2, d1, trace, m)
        # specialise the generalised branch at the witness
        if x1 == x2:
            dinst = instantiate(p1c, x1, w)
        else:
            avoid = derivation_unknown_names(p1c) | {x1.name, x2.name}
            avoid |= {y.name for y in unknowns_in(w)} | {y.name for y in unknowns_in(b2)}
            x3 = fresh_unknown(x1, avoid)
            renamed = deriv_perm2(Perm2.swap(x1, x3), p1c)
            dinst = instantiate(renamed, x3, w)
        return _spawn(Sequent(L, R), inst, dinst, p2c, trace, m)

    raise TransformError(f"essential cut on unexpected formula {fc}")
