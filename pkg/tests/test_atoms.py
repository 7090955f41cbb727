"""Permutation group and atom-set behaviour."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from pnl.atoms import (
    Atom,
    AtomSet,
    FreshnessError,
    NameSort,
    Perm,
    find_disagreement,
    fresh_atom,
    perm_agrees_on,
    perm_apply,
    perm_compose,
    perm_inverse,
    set_add,
    set_apply_perm,
    set_member,
    set_remove,
    set_subset,
    set_union,
)
from generators import ALL_SORTS, M, N, apply_ops, perm_of_ops, random_atomset, random_perm_ops
from oracles import window

W = window()
WINDOW_ATOMS = [Atom(s, i) for s in ALL_SORTS for i in range(-W, W + 1)]


def pointwise_equal(p1: Perm, p2: Perm) -> bool:
    return all(p1.apply(a) == p2.apply(a) for a in WINDOW_ATOMS)


def test_swap_and_shift_basics():
    a, b = Atom(N, -1), Atom(N, 0)
    assert perm_apply(Perm.swap(a, b), a) == b
    assert perm_apply(Perm.swap(a, b), b) == a
    assert perm_apply(Perm.shift(N), Atom(N, 0)) == Atom(N, 1)
    assert perm_apply(Perm.shift(N), Atom(M, 0)) == Atom(M, 0)
    assert perm_apply(Perm.identity(), a) == a


def test_compose_inverse_identity_pointwise():
    rng = random.Random(0)
    for _ in range(300):
        ops1, ops2 = random_perm_ops(rng), random_perm_ops(rng)
        p1, p2 = perm_of_ops(ops1), perm_of_ops(ops2)
        comp = perm_compose(p1, p2)
        for a in WINDOW_ATOMS:
            assert comp.apply(a) == apply_ops(ops1, apply_ops(ops2, a))
        inv = perm_inverse(p1)
        for a in WINDOW_ATOMS:
            assert inv.apply(p1.apply(a)) == a
        assert perm_compose(p1, inv).is_identity()
        assert perm_compose(inv, p1).is_identity()
        assert perm_compose(p1, Perm.identity()) == p1
        assert perm_compose(Perm.identity(), p1) == p1


def test_canonical_form_is_complete():
    # different generator words for the same function normalize identically
    rng = random.Random(1)
    for _ in range(200):
        ops = random_perm_ops(rng)
        p = perm_of_ops(ops)
        r = perm_of_ops(random_perm_ops(rng))
        q = perm_compose(perm_compose(p, r), perm_inverse(r))
        assert q == p
        assert pointwise_equal(p, q)


def test_canonical_equality_matches_pointwise():
    rng = random.Random(2)
    for _ in range(300):
        p1 = perm_of_ops(random_perm_ops(rng))
        p2 = perm_of_ops(random_perm_ops(rng))
        assert (p1 == p2) == pointwise_equal(p1, p2)


def test_group_associativity():
    rng = random.Random(3)
    for _ in range(150):
        p1, p2, p3 = (perm_of_ops(random_perm_ops(rng)) for _ in range(3))
        assert perm_compose(perm_compose(p1, p2), p3) == perm_compose(p1, perm_compose(p2, p3))


def test_set_membership_examples():
    s = AtomSet.below([N])
    assert set_member(s, Atom(N, -3))
    assert not set_member(s, Atom(N, 2))
    s2 = AtomSet.below([N], [Atom(N, 2)])
    assert set_member(s2, Atom(N, 2))
    s3 = AtomSet.finite([])
    assert not set_member(s3, Atom(N, -1))


def test_set_apply_perm_matches_membership():
    rng = random.Random(4)
    for _ in range(200):
        s = random_atomset(rng)
        p = perm_of_ops(random_perm_ops(rng))
        img = set_apply_perm(p, s)
        inv = perm_inverse(p)
        for a in WINDOW_ATOMS:
            assert set_member(img, a) == set_member(s, inv.apply(a))


def test_shift_image_of_below():
    img = set_apply_perm(Perm.shift(N), AtomSet.below([N]))
    want = AtomSet.below([N], [Atom(N, 0)])
    assert img == want


def test_swap_moves_single_member():
    s = AtomSet.below([N])
    a, b = Atom(N, -1), Atom(N, 5)
    img = set_apply_perm(Perm.swap(a, b), s)
    assert not set_member(img, a)
    assert set_member(img, b)


def test_set_ops_match_membership_oracle():
    rng = random.Random(5)
    for _ in range(200):
        s, t = random_atomset(rng), random_atomset(rng)
        u = set_union(s, t)
        for a in WINDOW_ATOMS:
            assert set_member(u, a) == (set_member(s, a) or set_member(t, a))
        finite = {Atom(rng.choice(ALL_SORTS), rng.randint(-4, 4)) for _ in range(2)}
        r = set_remove(s, finite)
        d = set_add(s, finite)
        for a in WINDOW_ATOMS:
            assert set_member(r, a) == (set_member(s, a) and a not in finite)
            assert set_member(d, a) == (set_member(s, a) or a in finite)
        sub = set_subset(s, t)
        brute = all(not set_member(s, a) or set_member(t, a) for a in WINDOW_ATOMS)
        assert sub == brute


def test_union_identity_and_subset_examples():
    s = AtomSet.below([N], [Atom(N, 3)])
    assert set_union(s, AtomSet.empty()) == s
    a = Atom(N, -2)
    assert set_subset(set_remove(AtomSet.below([N]), [a]), AtomSet.below([N]))


def test_closure_under_operations():
    rng = random.Random(6)
    for _ in range(100):
        s = random_atomset(rng, permission=True)
        assert s.is_permission_set()
        p = perm_of_ops(random_perm_ops(rng))
        assert set_apply_perm(p, s).is_permission_set()
        assert set_union(s, random_atomset(rng, permission=True)).is_permission_set()
        finite = [Atom(N, rng.randint(-3, 3))]
        assert set_remove(s, finite).parts is not None
        assert set_add(s, finite).parts is not None


def test_agreement_examples():
    s = AtomSet.below([N])
    out1, out2 = Atom(N, 4), Atom(N, 7)
    assert perm_agrees_on(Perm.swap(out1, out2), Perm.identity(), s)
    a, b = Atom(N, -1), Atom(N, 0)
    assert not perm_agrees_on(Perm.swap(a, b), Perm.identity(), s)
    assert not perm_agrees_on(Perm.shift(N), Perm.identity(), s)
    w = find_disagreement(Perm.shift(N), Perm.identity(), s)
    assert set_member(s, w) and perm_apply(Perm.shift(N), w) != w


def test_agreement_reflexive_and_matches_sampling():
    rng = random.Random(7)
    for _ in range(200):
        p1 = perm_of_ops(random_perm_ops(rng))
        p2 = perm_of_ops(random_perm_ops(rng))
        s = random_atomset(rng)
        assert perm_agrees_on(p1, p1, s)
        got = perm_agrees_on(p1, p2, s)
        sampled = all(
            p1.apply(a) == p2.apply(a) for a in WINDOW_ATOMS if set_member(s, a)
        )
        assert got == sampled
        w = find_disagreement(p1, p2, s)
        if w is not None:
            assert set_member(s, w) and p1.apply(w) != p2.apply(w)


def test_fresh_atom_policy():
    assert fresh_atom(N, AtomSet.empty(), "above") == Atom(N, 0)
    assert fresh_atom(N, AtomSet.finite([Atom(N, 0)]), "above") == Atom(N, 1)
    assert fresh_atom(N, AtomSet.finite([Atom(N, -1)]), "below") == Atom(N, -2)
    holes = AtomSet.below([N], [Atom(N, -2), Atom(N, -5)])
    assert fresh_atom(N, holes, "below") == Atom(N, -2)
    with pytest.raises(FreshnessError):
        fresh_atom(N, AtomSet.below([N]), "below")


@given(st.integers(-20, 20), st.integers(-20, 20), st.integers(-3, 3))
@settings(max_examples=200)
def test_swap_shift_normal_form_hypothesis(i, j, k):
    a, b = Atom(N, i), Atom(N, j)
    p = perm_compose(Perm.shift(N, k) if k else Perm.identity(),
                     Perm.swap(a, b) if i != j else Perm.identity())
    q = perm_inverse(perm_inverse(p))
    assert p == q
    for idx in range(-8, 9):
        at = Atom(N, idx)
        assert perm_apply(perm_compose(p, perm_inverse(p)), at) == at
