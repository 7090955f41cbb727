"""Command-line front end.

Exit codes: 0 success, 1 logical failure (invalid proof, inequivalent
terms), 2 parse or typecheck error, 3 fuel exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .atoms import Perm
from .parsing import (
    Context,
    ParseError,
    declare_unknown,
    parse_atomset,
    parse_fol_sequent,
    parse_perm,
    parse_proof_text,
    parse_prop,
    parse_rules_text,
    parse_signature_text,
    parse_substitution,
    parse_term,
    parse_theory_text,
    print_atom,
    print_derivation,
    print_perm,
    print_proof_file,
    print_prop,
    print_sequent,
    print_term,
    ProofFile,
)
from .proofs import Derivation, check, cut_eliminate, CheckError
from .subst import subst_apply
from .syntax import Signature, alpha_eq, typecheck_prop, typecheck_term
from .theories import (
    THEORY_NAMES,
    amod_sequent,
    builtin_signature_arith,
    builtin_theory,
    lint_rules,
    rewrite,
    sub_rewrite_rules,
)


@dataclass
class Workspace:
    """Loaded signature, theories, and unknown declarations."""

    signature: Signature
    context: Context
    theories: list = field(default_factory=list)

    @staticmethod
    def from_args(args) -> "Workspace":
        if getattr(args, "sig", None):
            if args.sig == "builtin:arith":
                sig = builtin_signature_arith()
                ctx = Context(sig)
            else:
                sig, ctx = parse_signature_text(Path(args.sig).read_text())
        else:
            sig = builtin_signature_arith()
            ctx = Context(sig)
        ws = Workspace(sig, ctx)
        for name in getattr(args, "theory", None) or []:
            ws.load_theory(name)
        for decl in getattr(args, "declare", None) or []:
            declare_unknown(decl, ws.context)
        return ws

    def load_theory(self, name: str):
        if name in THEORY_NAMES:
            thy = builtin_theory(name)
        else:
            thy = parse_theory_text(Path(name).read_text(), Path(name).stem,
                                    self.signature)
        self.theories.append(thy)
        self.signature = _merge(self.signature, thy.signature)
        self.context.signature = self.signature
        return thy


def _merge(s1: Signature, s2: Signature) -> Signature:
    return s1.extend(
        name_sorts=[s for s in s2.name_sorts if s not in s1.name_sorts],
        base_sorts=[s for s in s2.base_sorts if s not in s1.base_sorts],
        term_formers=[f for f in s2.term_formers if f not in s1.term_formers],
        prop_formers=[f for f in s2.prop_formers if f not in s1.prop_formers],
    )


def _emit(args, record: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(record, sort_keys=True))
    else:
        print(text)


def _node_report(sig: Signature, d: Derivation) -> list[dict]:
    errors = check(sig, d)
    by_path: dict[str, list[str]] = {}
    for e in errors:
        path = e.split(":", 1)[0]
        by_path.setdefault(path, []).append(e)
    out = []

    def walk(node: Derivation, path: str):
        out.append({
            "node": path,
            "rule": node.rule,
            "sequent": print_sequent(node.conclusion, sig),
            "ok": path not in by_path,
            "errors": by_path.get(path, []),
        })
        for i, p in enumerate(node.premises):
            walk(p, f"{path}.{i}")

    walk(d, "root")
    return out


def cmd_check(args) -> int:
    pf = _load_proof(args)
    report = _node_report(pf.signature, pf.derivation)
    ok = all(r["ok"] for r in report)
    for r in report:
        if args.json:
            print(json.dumps(r, sort_keys=True))
        else:
            mark = "ok " if r["ok"] else "FAIL"
            print(f"{mark} {r['node']:<12} {r['rule']:<8} {r['sequent']}")
            for e in r["errors"]:
                print(f"     {e}")
    if not args.json:
        print("valid" if ok else "invalid")
    return 0 if ok else 1


def _load_proof(args) -> ProofFile:
    path = Path(args.proof)
    resolver = lambda rel: (path.parent / rel).read_text()
    return parse_proof_text(path.read_text(), resolver=resolver)


def cmd_alpha(args) -> int:
    ws = Workspace.from_args(args)
    kind = "prop" if args.prop else "term"
    parse = parse_prop if args.prop else parse_term
    t1 = parse(args.left, ws.context)
    t2 = parse(args.right, ws.context)
    if args.prop:
        typecheck_prop(ws.signature, t1)
        typecheck_prop(ws.signature, t2)
    else:
        typecheck_term(ws.signature, t1)
        typecheck_term(ws.signature, t2)
    eq = alpha_eq(t1, t2)
    _emit(args, {"kind": kind, "alpha_equal": eq}, "alpha-equal" if eq else "distinct")
    return 0 if eq else 1


def cmd_perm(args) -> int:
    ws = Workspace.from_args(args)
    p1 = parse_perm(args.perm, ws.context)
    if args.action == "apply":
        a = parse_term(args.arg, ws.context)
        from .syntax import perm1_act

        out = perm1_act(p1, a)
        _emit(args, {"result": print_term(out, ws.signature)}, print_term(out, ws.signature))
    else:
        from .atoms import perm_compose

        p2 = parse_perm(args.arg, ws.context)
        out = perm_compose(p1, p2)
        _emit(args, {"result": print_perm(out)}, print_perm(out))
    return 0


def cmd_subst(args) -> int:
    ws = Workspace.from_args(args)
    theta = parse_substitution(args.substitution, ws.context)
    if args.prop:
        t = parse_prop(args.expr, ws.context)
        out = subst_apply(theta, t)
        text = print_prop(out, ws.signature)
    else:
        t = parse_term(args.expr, ws.context)
        out = subst_apply(theta, t)
        text = print_term(out, ws.signature)
    _emit(args, {"result": text}, text)
    return 0


def cmd_rewrite(args) -> int:
    ws = Workspace.from_args(args)
    rules = []
    for name in args.theory or ["SUB"]:
        if name == "SUB":
            rules.extend(sub_rewrite_rules())
        else:
            rules.extend(parse_rules_text(Path(name).read_text(), ws.signature))
    if args.lint:
        for note in lint_rules(rules):
            print(f"lint: {note}", file=sys.stderr)
    t = parse_term(args.term, ws.context)
    typecheck_term(ws.signature, t)
    res = rewrite(rules, t, fuel=args.fuel, sig=ws.signature)
    if args.json:
        for step in res.steps:
            print(json.dumps({
                "position": list(step.position),
                "rule": step.rule,
                "redex": print_term(step.redex, ws.signature),
                "result": print_term(step.result, ws.signature),
                "equality": print_prop(step.equality, ws.signature),
            }, sort_keys=True))
        print(json.dumps({
            "normal_form": print_term(res.term, ws.signature),
            "steps": len(res.steps),
            "fuel_exhausted": res.fuel_exhausted,
        }, sort_keys=True))
    else:
        if args.trace:
            for step in res.steps:
                pos = ".".join(map(str, step.position)) or "root"
                print(f"  [{step.rule} @ {pos}] {print_term(step.redex, ws.signature)}"
                      f" --> {print_term(step.result, ws.signature)}")
        print(print_term(res.term, ws.signature))
    if res.fuel_exhausted:
        print("fuel exhausted; partial result shown", file=sys.stderr)
        return 3
    return 0


def cmd_translate_fol(args) -> int:
    ws = Workspace.from_args(args)
    src = Path(args.fol_file).read_text() if args.fol_file != "-" else sys.stdin.read()
    hyps, goals = parse_fol_sequent(src, ws.context)
    out = amod_sequent(hyps, goals)
    typecheck_prop(builtin_signature_arith(), out)
    text = print_prop(out, ws.signature)
    _emit(args, {"proposition": text}, text)
    return 0


def cmd_cutelim(args) -> int:
    pf = _load_proof(args)
    try:
        out = cut_eliminate(pf.signature, pf.derivation)
    except CheckError as e:
        print(f"input does not check: {e}", file=sys.stderr)
        return 1
    errs = check(pf.signature, out)
    if errs:
        print("internal error: output fails to check", file=sys.stderr)
        for e in errs:
            print(f"  {e}", file=sys.stderr)
        return 1
    pf2 = ProofFile(pf.signature, pf.context, out.conclusion, out, pf.theories,
                    pf.stated_goal)
    text = print_proof_file(pf2)
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output}")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pnl",
        description="Check, transform, and rewrite permissive-nominal-logic artifacts.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sig=True):
        if sig:
            p.add_argument("--sig", help="signature file, or builtin:arith")
            p.add_argument("--theory", action="append",
                           help="theory to load (builtin name or file)")
            p.add_argument("--declare", action="append", metavar="DECL",
                           help="unknown declaration, e.g. 'X : iota / A<'")
        p.add_argument("--json", action="store_true",
                       help="line-delimited structured output")

    p = sub.add_parser("check", help="check a proof file")
    p.add_argument("proof")
    common(p, sig=False)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("alpha", help="decide alpha-equivalence of two terms")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--prop", action="store_true", help="compare propositions")
    common(p)
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("perm", help="apply or compose permutations")
    p.add_argument("action", choices=["apply", "compose"])
    p.add_argument("perm")
    p.add_argument("arg")
    common(p)
    p.set_defaults(func=cmd_perm)

    p = sub.add_parser("subst", help="apply a substitution literal")
    p.add_argument("substitution", help="e.g. '[X := zero()]'")
    p.add_argument("expr")
    p.add_argument("--prop", action="store_true")
    common(p)
    p.set_defaults(func=cmd_subst)

    p = sub.add_parser("rewrite", help="normalize under directed axioms")
    p.add_argument("term")
    p.add_argument("--fuel", type=int, default=10_000)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--lint", action="store_true",
                   help="flag permission-set choices that differ from the figures")
    common(p)
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("translate-fol", help="embed a first-order sequent")
    p.add_argument("fol_file", help="file containing 'hyps |- goals', or -")
    common(p)
    p.set_defaults(func=cmd_translate_fol)

    p = sub.add_parser("cutelim", help="eliminate cuts from a proof file")
    p.add_argument("proof")
    p.add_argument("-o", "--output")
    common(p, sig=False)
    p.set_defaults(func=cmd_cutelim)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        from .syntax import SortError
        from .subst import SubstitutionError

        if isinstance(e, (SortError, SubstitutionError)):
            print(f"error: {e}", file=sys.stderr)
            return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
