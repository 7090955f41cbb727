"""Forward derivation-building combinators for tests.

These construct explicit derivations (no search): each helper takes the
target sequent and returns a node whose premises are built by the given
continuations.  The de-Morgan conjunction used by the iff sugar gets
introduction/elimination patterns of its own.
"""

from __future__ import annotations

from pnl.atoms import Perm
from pnl.proofs import (
    Derivation,
    Sequent,
    ax,
    bot_l,
    forall_l,
    imp_l,
    imp_r,
    seq_add,
    seq_member,
    seq_remove,
    weaken,
)
from pnl.subst import subst_apply, subst_single
from pnl.syntax import Bot, Forall, Imp, Prop, conj


def hyp(seq: Sequent, phi: Prop, perm: Perm = None) -> Derivation:
    """Close the goal by the axiom rule."""
    return ax(seq, phi, perm or Perm.identity())


def imp_intro(seq: Sequent, p: Imp, cont) -> Derivation:
    assert seq_member(p, seq.right), f"{p} not on the right"
    premise = Sequent(seq_add(seq.left, [p.left]),
                      seq_add(seq_remove(seq.right, p), [p.right]))
    return imp_r(seq, p.left, p.right, cont(premise))


def imp_use(seq: Sequent, p: Imp, arg, cont) -> Derivation:
    """Use an implication hypothesis: prove its antecedent, continue with
    its consequent added."""
    assert seq_member(p, seq.left), f"{p} not on the left"
    p1 = arg(Sequent(seq.left, seq_add(seq.right, [p.left])))
    p2 = cont(Sequent(seq_add(seq.left, [p.right]), seq.right))
    return imp_l(seq, p.left, p.right, p1, p2)


def forall_use(seq: Sequent, p: Forall, witness, cont) -> Derivation:
    assert seq_member(p, seq.left), f"{p} not on the left"
    inst = subst_apply(subst_single(p.unknown, witness), p.body)
    premise = Sequent(seq_add(seq.left, [inst]), seq.right)
    return forall_l(seq, p.unknown, p.body, witness, cont(premise))


def conj_use(seq: Sequent, a: Prop, b: Prop, cont) -> Derivation:
    """Split a de-Morgan conjunction hypothesis into both conjuncts."""
    c = conj(a, b)
    assert seq_member(c, seq.left), f"{c} not on the left"
    j = Imp(a, Imp(b, Bot()))

    def arg(s):
        def inner1(s1):
            def inner2(s2):
                return weaken(cont(Sequent(s2.left, seq_remove(s2.right, Bot()))),
                              [], [Bot()])
            return imp_intro(s1, Imp(b, Bot()), inner2)
        return imp_intro(s, j, inner1)

    return imp_use(seq, c, arg, lambda s: bot_l(s))


def conj_prove_hyps(seq: Sequent, a: Prop, b: Prop) -> Derivation:
    """Prove a de-Morgan conjunction on the right when both conjuncts are
    hypotheses."""
    c = conj(a, b)
    assert seq_member(c, seq.right)
    assert seq_member(a, seq.left) and seq_member(b, seq.left)
    j = Imp(a, Imp(b, Bot()))

    def after_j(s):
        return imp_use(
            s, j,
            lambda s1: hyp(s1, a),
            lambda s2: imp_use(
                s2, Imp(b, Bot()),
                lambda s3: hyp(s3, b),
                lambda s4: bot_l(s4),
            ),
        )

    return imp_intro(seq, Imp(j, Bot()), after_j)


def iff_use_forward(seq: Sequent, a: Prop, b: Prop, cont) -> Derivation:
    """From an iff hypothesis conclude the forward implication and apply
    it: prove ``a``, continue with ``b``."""

    def with_parts(s):
        return imp_use(s, Imp(a, b), lambda s1: hyp(s1, a), cont)

    return conj_use(seq, Imp(a, b), Imp(b, a), with_parts)


def iff_use_backward(seq: Sequent, a: Prop, b: Prop, cont) -> Derivation:
    def with_parts(s):
        return imp_use(s, Imp(b, a), lambda s1: hyp(s1, b), cont)

    return conj_use(seq, Imp(a, b), Imp(b, a), with_parts)
