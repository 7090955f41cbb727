"""Proof kernel and theory toolkit for permissive-nominal logic."""

from .atoms import (
    Atom,
    AtomSet,
    FreshnessError,
    NameSort,
    Perm,
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
from .syntax import (
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
    Prop,
    Signature,
    Sort,
    SortError,
    TAtom,
    Term,
    Tuple_,
    TupleSort,
    Unknown,
    alpha_eq,
    fa,
    fv,
    perm1_act,
    perm2_act,
    typecheck_prop,
    typecheck_term,
    var,
)
from .subst import Substitution, SubstitutionError, nontriv_subst, subst_apply, subst_single
from .proofs import (
    CheckError,
    Derivation,
    Sequent,
    check,
    check_ok,
    cut_eliminate,
    cut_measure,
    instantiate,
    permute_formula,
    weaken,
)
from .termmodel import Valuation, identity_valuation, interp_term
from .theories import (
    RewriteRule,
    Theory,
    amod_formula,
    amod_sequent,
    amod_term,
    builtin_signature_arith,
    builtin_theory,
    fol_subst,
    match,
    rewrite,
    sub_rewrite_rules,
)

__version__ = "0.1.0"
