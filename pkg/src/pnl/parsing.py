"""Text syntax: terms, propositions, permutations, atom sets, sorts,
signature/theory/rule/proof files, and the printers that invert them.

Grammar sketch (UTF-8):

    atom         nu#-1
    swap         (nu#-1 nu#0)
    shift        shift{nu}^2          exponent optional, default 1
    permutation  factors joined by '.' or '∘'; 'id' is the identity;
                 'p . q' applies q first
    finite set   {nu#-1, nu#3}
    permission   A< ^ {nu#0}          below half of every ambient name
                 A<[nu] ^ {...}       sort, or of the listed sorts
    term         f(t, u)   (t, u)   [nu#-1] t   (nu#-1 nu#0) * X   X
    prop         false   p => q   P(t)   forall X . p
                 sugar: ~p, p & q, p | q, p <=> q, exists X . p

Unknowns must be declared (``unknown X : sort / permset``) before use;
parsers take a :class:`Workspace`-like context carrying the signature
and declarations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .atoms import Atom, AtomSet, NameSort, Perm, perm_compose
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
    Sort,
    TAtom,
    Term,
    Tuple_,
    TupleSort,
    Unknown,
    conj,
    disj,
    iff,
    neg,
    var,
)
from . import theories as _theories
from .proofs import (
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
)
from .subst import Substitution, subst_apply, subst_single


class ParseError(Exception):
    pass


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<atom>[A-Za-z_][A-Za-z0-9_]*\#-?[0-9]+)
  | (?P<belowset>A<)
  | (?P<arrow>-->|->|\|-|<=>|=>|:=|!=)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<int>-?[0-9]+)
  | (?P<sym>[()\[\]{},.*^/:;~&|∘=+])
  | (?P<string>"(?:[^"\\]|\\.)*")
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    pos: int


def tokenize(src: str) -> list[Token]:
    out = []
    i = 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if not m:
            raise ParseError(f"unexpected character {src[i]!r} at offset {i}")
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), i))
        i = m.end()
    return out


@dataclass
class Context:
    """Parsing context: the ambient signature and declared unknowns."""

    signature: Signature
    unknowns: dict[str, Unknown] = field(default_factory=dict)

    def declare(self, x: Unknown) -> None:
        old = self.unknowns.get(x.name)
        if old is not None and old != x:
            raise ParseError(f"unknown {x.name} declared twice with different data")
        self.unknowns[x.name] = x

    def name_sort(self, name: str) -> NameSort:
        for s in self.signature.name_sorts:
            if s.id == name:
                return s
        raise ParseError(f"undeclared name sort {name!r}")


class _Parser:
    def __init__(self, tokens: list[Token], ctx: Context):
        self.tokens = tokens
        self.ctx = ctx
        self.i = 0

    def peek(self, k: int = 0) -> Optional[Token]:
        j = self.i + k
        return self.tokens[j] if j < len(self.tokens) else None

    def next(self) -> Token:
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of input")
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, got {t.text!r} at offset {t.pos}")
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t is not None and t.text == text

    def eat(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def done(self) -> bool:
        return self.i >= len(self.tokens)

    def save(self) -> int:
        return self.i

    def restore(self, mark: int) -> None:
        self.i = mark

    # -- atoms and permutations ------------------------------------------

    def atom(self) -> Atom:
        t = self.next()
        if t.kind != "atom":
            raise ParseError(f"expected an atom, got {t.text!r} at offset {t.pos}")
        sort_id, idx = t.text.split("#")
        return Atom(self.ctx.name_sort(sort_id), int(idx))

    def perm_factor(self) -> Perm:
        if self.eat("id"):
            return Perm.identity()
        if self.at("shift"):
            self.next()
            self.expect("{")
            sort = self.ctx.name_sort(self.next().text)
            self.expect("}")
            power = 1
            if self.eat("^"):
                t = self.next()
                power = int(t.text)
            return Perm.shift(sort, power)
        self.expect("(")
        atoms = [self.atom()]
        while not self.at(")"):
            atoms.append(self.atom())
        self.expect(")")
        if len(atoms) < 2:
            raise ParseError("a swapping lists at least two atoms")
        # (a b c ...) is the cycle sending a to b, b to c, and back
        out = Perm.identity()
        for x, y in zip(atoms, atoms[1:]):
            out = perm_compose(out, Perm.swap(x, y))
        return out

    def perm(self) -> Perm:
        out = self.perm_factor()
        while self.eat(".") or self.eat("∘"):
            out = perm_compose(out, self.perm_factor())
        return out

    # -- atom sets --------------------------------------------------------

    def finite_set(self) -> set[Atom]:
        self.expect("{")
        atoms: set[Atom] = set()
        if not self.at("}"):
            atoms.add(self.atom())
            while self.eat(","):
                atoms.add(self.atom())
        self.expect("}")
        return atoms

    def atomset(self) -> AtomSet:
        if self.at("A<"):
            self.next()
            sorts = list(self.ctx.signature.name_sorts)
            if self.eat("["):
                sorts = [self.ctx.name_sort(self.next().text)]
                while self.eat(","):
                    sorts.append(self.ctx.name_sort(self.next().text))
                self.expect("]")
            exceptions: set[Atom] = set()
            if self.eat("^"):
                exceptions = self.finite_set()
            return AtomSet.below(sorts, exceptions)
        return AtomSet.finite(self.finite_set())

    # -- sorts ------------------------------------------------------------

    def sort(self) -> Sort:
        if self.eat("["):
            binder = self.ctx.name_sort(self.next().text)
            self.expect("]")
            return AbsSort(binder, self.sort())
        if self.eat("("):
            if self.eat(")"):
                return TupleSort(())
            items = [self.sort()]
            while self.eat(","):
                items.append(self.sort())
            self.expect(")")
            return items[0] if len(items) == 1 else TupleSort(tuple(items))
        name = self.next().text
        for s in self.ctx.signature.name_sorts:
            if s.id == name:
                return s
        for s in self.ctx.signature.base_sorts:
            if s.id == name:
                return s
        raise ParseError(f"undeclared sort {name!r}")

    # -- terms -------------------------------------------------------------

    def term(self) -> Term:
        if self.at("["):
            self.next()
            binder = self.atom()
            self.expect("]")
            return Abs(binder, self.term())
        mark = self.save()
        # moderated unknown: permutation '*' name
        try:
            p = self.perm()
            if self.eat("*"):
                t = self.next()
                x = self.ctx.unknowns.get(t.text)
                if x is None:
                    raise ParseError(f"undeclared unknown {t.text!r}")
                return Mod(p, x)
            raise ParseError("not a moderation")
        except ParseError:
            self.restore(mark)
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of term")
        if tok.kind == "atom":
            return TAtom(self.atom())
        if tok.text == "(":
            self.next()
            if self.eat(")"):
                return Tuple_(())
            items = [self.term()]
            while self.eat(","):
                items.append(self.term())
            self.expect(")")
            return items[0] if len(items) == 1 else Tuple_(tuple(items))
        if tok.kind == "name":
            name = self.next().text
            if self.at("("):
                self.next()
                if self.eat(")"):
                    return App(name, Tuple_(()))
                args = [self.term()]
                while self.eat(","):
                    args.append(self.term())
                self.expect(")")
                arg = args[0] if len(args) == 1 else Tuple_(tuple(args))
                return self._app(name, arg)
            if name in self.ctx.unknowns:
                return var(self.ctx.unknowns[name])
            if self.ctx.signature.has_term_former(name):
                return App(name, Tuple_(()))
            raise ParseError(f"unknown identifier {name!r} in term")
        raise ParseError(f"cannot parse a term at {tok.text!r} (offset {tok.pos})")

    def _app(self, name: str, arg: Term) -> Term:
        # single non-tuple argument formers take the argument bare
        want, _ = self.ctx.signature.term_former(name)
        if isinstance(want, TupleSort) and not isinstance(arg, Tuple_):
            arg = Tuple_((arg,))
        return App(name, arg)

    # -- propositions -------------------------------------------------------

    def prop(self) -> Prop:
        return self._iff()

    def _iff(self) -> Prop:
        left = self._imp()
        if self.eat("<=>"):
            return iff(left, self._iff())
        return left

    def _imp(self) -> Prop:
        left = self._or()
        if self.eat("=>"):
            return Imp(left, self._imp())
        return left

    def _or(self) -> Prop:
        left = self._and()
        while self.eat("|"):
            left = disj(left, self._and())
        return left

    def _and(self) -> Prop:
        left = self._unary()
        while self.eat("&"):
            left = conj(left, self._unary())
        return left

    def _unary(self) -> Prop:
        if self.eat("~"):
            return neg(self._unary())
        if self.at("forall") or self.at("exists"):
            is_forall = self.next().text == "forall"
            t = self.next()
            x = self.ctx.unknowns.get(t.text)
            if x is None:
                raise ParseError(f"undeclared unknown {t.text!r} under a quantifier")
            self.expect(".")
            body = self.prop()
            return Forall(x, body) if is_forall else neg(Forall(x, neg(body)))
        if self.eat("false"):
            return Bot()
        if self.at("("):
            mark = self.save()
            self.next()
            try:
                p = self.prop()
                self.expect(")")
                return p
            except ParseError:
                self.restore(mark)
                raise
        tok = self.peek()
        if tok is not None and tok.kind == "name":
            name = self.next().text
            self.expect("(")
            if self.eat(")"):
                return Pred(name, Tuple_(()))
            args = [self.term()]
            while self.eat(","):
                args.append(self.term())
            self.expect(")")
            arg = args[0] if len(args) == 1 else Tuple_(tuple(args))
            want = self.ctx.signature.prop_former(name)
            if isinstance(want, TupleSort) and not isinstance(arg, Tuple_):
                arg = Tuple_((arg,))
            return Pred(name, arg)
        raise ParseError(f"cannot parse a proposition at {tok and tok.text!r}")

    # -- substitution literals ----------------------------------------------

    def substitution(self) -> Substitution:
        self.expect("[")
        mapping = {}
        if not self.at("]"):
            while True:
                t = self.next()
                x = self.ctx.unknowns.get(t.text)
                if x is None:
                    raise ParseError(f"undeclared unknown {t.text!r} in substitution")
                self.expect(":=")
                mapping[x] = self.term()
                if not self.eat(","):
                    break
        self.expect("]")
        return Substitution.make(mapping, self.ctx.signature)

    def sequent(self) -> Sequent:
        left: list[Prop] = []
        if not self.at("|-"):
            left.append(self.prop())
            while self.eat(","):
                left.append(self.prop())
        self.expect("|-")
        right: list[Prop] = []
        if not self.done() and not self.at(")"):
            right.append(self.prop())
            while self.eat(","):
                right.append(self.prop())
        return Sequent.make(left, right)


def _parse_with(src: str, ctx: Context, method: str):
    p = _Parser(tokenize(src), ctx)
    out = getattr(p, method)()
    if not p.done():
        t = p.peek()
        raise ParseError(f"trailing input at {t.text!r} (offset {t.pos})")
    return out


def parse_term(src: str, ctx: Context) -> Term:
    return _parse_with(src, ctx, "term")


def parse_prop(src: str, ctx: Context) -> Prop:
    return _parse_with(src, ctx, "prop")


def parse_perm(src: str, ctx: Context) -> Perm:
    return _parse_with(src, ctx, "perm")


def parse_atomset(src: str, ctx: Context) -> AtomSet:
    return _parse_with(src, ctx, "atomset")


def parse_substitution(src: str, ctx: Context) -> Substitution:
    return _parse_with(src, ctx, "substitution")


def parse_sequent(src: str, ctx: Context) -> Sequent:
    return _parse_with(src, ctx, "sequent")


def parse_sort(src: str, ctx: Context) -> Sort:
    return _parse_with(src, ctx, "sort")


# ---------------------------------------------------------------------------
# Printers (deterministic; parse . print is the identity up to alpha)

def print_atom(a: Atom) -> str:
    return f"{a.sort.id}#{a.index}"


def print_perm(p: Perm) -> str:
    if p.is_identity():
        return "id"
    pieces = []
    graph = p.graph_map()
    seen: set[Atom] = set()
    for a in sorted(graph):
        if a in seen:
            continue
        cycle = [a]
        seen.add(a)
        b = graph[a]
        while b != a:
            cycle.append(b)
            seen.add(b)
            b = graph[b]
        for x, y in zip(cycle, cycle[1:]):
            pieces.append(f"({print_atom(x)} {print_atom(y)})")
    for sort, k in p.shifts:
        pieces.append(f"shift{{{sort.id}}}" + (f"^{k}" if k != 1 else ""))
    return " . ".join(pieces)


def print_atomset(s: AtomSet, sig: Optional[Signature] = None) -> str:
    from .atoms import SetMode

    if s.is_finite():
        atoms = sorted(s.finite_atoms())
        return "{" + ", ".join(print_atom(a) for a in atoms) + "}"
    cof = [sort for sort, part in s.parts if part.mode is SetMode.COFIN_BELOW]
    fin = sorted(
        a for _, part in s.parts if part.mode is SetMode.FIN for a in part.exceptions
    )
    if fin:
        raise ValueError("mixed finite/cofinite sets have no concrete syntax")
    head = "A<"
    if sig is None or list(sig.name_sorts) != cof:
        head += "[" + ",".join(sort.id for sort in cof) + "]"
    exc = sorted(s.exception_atoms())
    if exc:
        head += " ^ {" + ", ".join(print_atom(a) for a in exc) + "}"
    return head


def print_term(t: Term, sig: Optional[Signature] = None) -> str:
    match t:
        case TAtom(a):
            return print_atom(a)
        case Tuple_(items):
            return "(" + ", ".join(print_term(r, sig) for r in items) + ")"
        case App(f, Tuple_(items)):
            return f + "(" + ", ".join(print_term(r, sig) for r in items) + ")"
        case App(f, arg):
            return f + "(" + print_term(arg, sig) + ")"
        case Abs(a, body):
            return f"[{print_atom(a)}] {print_term(body, sig)}"
        case Mod(p, x):
            if p.is_identity():
                return x.name
            return f"{print_perm(p)} * {x.name}"
    raise TypeError(f"not a term: {t!r}")


def print_prop(p: Prop, sig: Optional[Signature] = None) -> str:
    match p:
        case Bot():
            return "false"
        case Imp(l, r):
            return f"({print_prop(l, sig)} => {print_prop(r, sig)})"
        case Pred(f, Tuple_(items)):
            return f + "(" + ", ".join(print_term(r, sig) for r in items) + ")"
        case Pred(f, arg):
            return f + "(" + print_term(arg, sig) + ")"
        case Forall(x, body):
            return f"(forall {x.name} . {print_prop(body, sig)})"
    raise TypeError(f"not a proposition: {p!r}")


def print_sort(s: Sort) -> str:
    match s:
        case NameSort(id) | BaseSort(id):
            return id
        case TupleSort(items):
            return "(" + ", ".join(print_sort(i) for i in items) + ")"
        case AbsSort(binder, body):
            return f"[{binder.id}]{print_sort(body)}"
    raise TypeError(f"not a sort: {s!r}")


def print_sequent(s: Sequent, sig: Optional[Signature] = None) -> str:
    l = ", ".join(print_prop(p, sig) for p in s.left)
    r = ", ".join(print_prop(p, sig) for p in s.right)
    return f"{l} |- {r}"


def print_substitution(theta: Substitution, sig: Optional[Signature] = None) -> str:
    body = ", ".join(f"{x.name} := {print_term(t, sig)}" for x, t in theta.graph)
    return f"[{body}]"


# ---------------------------------------------------------------------------
# Signature and declaration files

def parse_signature_text(src: str, base: Optional[Signature] = None) -> tuple[Signature, Context]:
    """Parse ``namesort/basesort/term/pred/unknown`` declaration lines.

    Returns the signature and a context carrying the declared unknowns.
    """
    name_sorts: list[NameSort] = list(base.name_sorts) if base else []
    base_sorts: list[BaseSort] = list(base.base_sorts) if base else []
    term_formers = list(base.term_formers) if base else []
    prop_formers = list(base.prop_formers) if base else []
    unknown_lines: list[str] = []

    for raw in src.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "namesort":
            name_sorts.append(NameSort(rest))
        elif head == "basesort":
            base_sorts.append(BaseSort(rest))
        elif head in ("term", "pred", "unknown"):
            unknown_lines.append(line)
        else:
            raise ParseError(f"unrecognised declaration {line!r}")

    sig = Signature.make(name_sorts, base_sorts, term_formers, prop_formers)
    ctx = Context(sig)
    leftover = []
    for line in unknown_lines:
        head, _, rest = line.partition(" ")
        if head == "term":
            name, _, arity = rest.partition(":")
            p = _Parser(tokenize(arity), ctx)
            p.expect("(")
            if p.eat(")"):
                arg: Sort = TupleSort(())
            else:
                items = [p.sort()]
                while p.eat(","):
                    items.append(p.sort())
                p.expect(")")
                arg = items[0] if len(items) == 1 else TupleSort(tuple(items))
            result = p.sort()
            if not isinstance(result, BaseSort):
                raise ParseError(f"term-former {name.strip()} must return a base sort")
            term_formers.append((name.strip(), arg, result))
            sig = Signature.make(name_sorts, base_sorts, term_formers, prop_formers)
            ctx.signature = sig
        elif head == "pred":
            name, _, arity = rest.partition(":")
            p = _Parser(tokenize(arity), ctx)
            prop_formers.append((name.strip(), p.sort()))
            sig = Signature.make(name_sorts, base_sorts, term_formers, prop_formers)
            ctx.signature = sig
        else:
            leftover.append(line)
    for line in leftover:
        head, _, rest = line.partition(" ")
        if head == "unknown":
            declare_unknown(rest, ctx)
        else:
            raise ParseError(f"unsupported declaration here: {line!r}")
    return sig, ctx


def declare_unknown(decl: str, ctx: Context) -> Unknown:
    """Parse ``X : sort / permset`` and add it to the context."""
    name, _, rest = decl.partition(":")
    sort_src, _, pm_src = rest.partition("/")
    sort = parse_sort(sort_src.strip(), ctx)
    pmss = parse_atomset(pm_src.strip(), ctx) if pm_src.strip() else AtomSet.below(
        ctx.signature.name_sorts
    )
    x = Unknown(name.strip(), sort, pmss)
    ctx.declare(x)
    return x


def print_signature(sig: Signature) -> str:
    lines = []
    for s in sig.name_sorts:
        lines.append(f"namesort {s.id}")
    for s in sig.base_sorts:
        lines.append(f"basesort {s.id}")
    for name, arg, result in sig.term_formers:
        if isinstance(arg, TupleSort):
            inner = ", ".join(print_sort(s) for s in arg.items)
            lines.append(f"term {name} : ({inner}) {result.id}")
        else:
            lines.append(f"term {name} : ({print_sort(arg)}) {result.id}")
    for name, arg in sig.prop_formers:
        if isinstance(arg, TupleSort):
            inner = ", ".join(print_sort(s) for s in arg.items)
            lines.append(f"pred {name} : ({inner})")
        else:
            lines.append(f"pred {name} : ({print_sort(arg)})")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Theory files

def parse_theory_text(src: str, name: str, base: Optional[Signature] = None) -> "_theories.Theory":
    """A theory file: signature fragment plus ``axiom label : prop`` lines."""
    axiom_lines = []
    decl_lines = []
    for raw in src.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("axiom "):
            axiom_lines.append(line[len("axiom "):])
        else:
            decl_lines.append(line)
    sig, ctx = parse_signature_text("\n".join(decl_lines), base)
    axioms = []
    for line in axiom_lines:
        label, _, body = line.partition(":")
        axioms.append((label.strip(), parse_prop(body.strip(), ctx)))
    thy = _theories.Theory(name, sig, tuple(axioms))
    thy.validate()
    return thy


def print_theory(thy: "_theories.Theory", base: Optional[Signature] = None) -> str:
    """Write a theory file: the signature fragment beyond ``base`` plus
    its axioms and the unknown declarations they bind."""
    base = base or _theories.builtin_signature_arith()
    lines = []
    for s in thy.signature.name_sorts:
        if s not in base.name_sorts:
            lines.append(f"namesort {s.id}")
    for s in thy.signature.base_sorts:
        if s not in base.base_sorts:
            lines.append(f"basesort {s.id}")
    for name, arg, result in thy.signature.term_formers:
        if (name, arg, result) not in base.term_formers:
            inner = (
                ", ".join(print_sort(s) for s in arg.items)
                if isinstance(arg, TupleSort) else print_sort(arg)
            )
            lines.append(f"term {name} : ({inner}) {result.id}")
    for name, arg in thy.signature.prop_formers:
        if (name, arg) not in base.prop_formers:
            inner = (
                ", ".join(print_sort(s) for s in arg.items)
                if isinstance(arg, TupleSort) else print_sort(arg)
            )
            lines.append(f"pred {name} : ({inner})")
    seen: dict[str, Unknown] = {}
    from .syntax import unknowns_in

    for _, p in thy.axioms:
        for x in sorted(unknowns_in(p), key=lambda u: u.name):
            if x.name not in seen:
                seen[x.name] = x
            elif seen[x.name] != x:
                raise ValueError(
                    f"theory {thy.name} reuses unknown name {x.name} at different data"
                )
    for x in seen.values():
        lines.append(
            f"unknown {x.name} : {print_sort(x.sort)} / {print_atomset(x.pmss, thy.signature)}"
        )
    for label, p in thy.axioms:
        lines.append(f"axiom {label} : {print_prop(p, thy.signature)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Rewrite-rule files

def parse_rules_text(src: str, base: Optional[Signature] = None) -> list["_theories.RewriteRule"]:
    """Rule files: optional declarations, then lines of the form

        rule label [eq_i] : LHS --> RHS where a in A<, b notin A<, Z in (b a)*A<
    """
    decl_lines = []
    rule_lines = []
    for raw in src.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        (rule_lines if line.startswith("rule ") else decl_lines).append(line)
    sig, ctx = parse_signature_text("\n".join(decl_lines), base)
    rules = []
    for line in rule_lines:
        rules.append(_parse_rule_line(line[len("rule "):], ctx))
    return rules


def _parse_rule_line(line: str, ctx: Context) -> "_theories.RewriteRule":
    head, _, rest = line.partition(":")
    head_parts = head.split()
    label = head_parts[0]
    eq_pred = head_parts[1].strip("[]") if len(head_parts) > 1 else "eq_i"
    body, _, where = rest.partition(" where ")
    lhs_src, arrow, rhs_src = body.partition("-->")
    if not arrow:
        raise ParseError(f"rule {label}: missing --> in {body!r}")

    atoms: list[_theories.RuleAtom] = []
    specs: dict[str, "_theories.PermSpec"] = {}
    if where.strip():
        for clause in where.split(","):
            words = clause.split()
            if len(words) >= 3 and words[1] == "in" and words[0] in ctx.unknowns:
                specs[words[0]] = _parse_spec(" ".join(words[2:]))
            elif len(words) == 3 and words[1] in ("in", "notin"):
                side = "below" if words[1] == "in" else "above"
                atoms.append(_theories.RuleAtom(words[0], ctx.signature.name_sorts[0], side))
            elif len(words) == 3 and words[1] == "!=":
                continue  # distinctness is implicit
            else:
                raise ParseError(f"rule {label}: bad where-clause {clause.strip()!r}")

    # map metavariable names to representative atoms for the pattern parser
    rep_ctx = Context(ctx.signature, dict(ctx.unknowns))
    rename: dict[str, Atom] = {}
    below_i, above_i = -1, 0
    for ra in atoms:
        if ra.side == "below":
            rename[ra.name] = Atom(ra.sort, below_i)
            below_i -= 1
        else:
            rename[ra.name] = Atom(ra.sort, above_i)
            above_i += 1

    def sub_names(src: str) -> str:
        out = src
        for name, atom in rename.items():
            out = re.sub(rf"\b{name}\b(?!#)", print_atom(atom), out)
        return out

    lhs = parse_term(sub_names(lhs_src.strip()), rep_ctx)
    rhs = parse_term(sub_names(rhs_src.strip()), rep_ctx)
    from .syntax import unknowns_in

    unknowns = []
    for x in sorted(unknowns_in(lhs) | unknowns_in(rhs), key=lambda u: u.name):
        unknowns.append((x, specs.get(x.name, _theories.SPEC_BELOW)))
    return _theories.RewriteRule(
        label, tuple(atoms), tuple(unknowns), lhs, rhs, eq_pred,
        tuple(rename.items()),
    )


def _parse_spec(src: str) -> "_theories.PermSpec":
    src = src.strip()
    if src == "A<":
        return _theories.SPEC_BELOW
    m = re.fullmatch(r"\(\s*(\w+)\s+(\w+)\s*\)\s*\*\s*A<", src)
    if m:
        return _theories.PermSpec("swapped", removed=m.group(2), added=m.group(1))
    m = re.fullmatch(r"A<\s*\+\s*\{\s*(\w+)\s*\}", src)
    if m:
        return _theories.PermSpec("extended", added=m.group(1))
    raise ParseError(f"unrecognised permission spec {src!r}")


# ---------------------------------------------------------------------------
# Proof files: s-expression derivations with a header

_RULE_TAGS = {"ax", "botL", "impL", "impR", "forallL", "forallR", "cut"}


@dataclass
class ProofFile:
    signature: Signature
    context: Context
    goal: Sequent
    derivation: Derivation
    theories: list[str] = field(default_factory=list)
    stated_goal: Optional[Sequent] = None


def parse_proof_text(src: str, base: Optional[Signature] = None,
                     resolver=None) -> ProofFile:
    """Parse a proof file: header lines then one s-expression derivation.

    Header lines: ``signature <builtin:arith|path>``, ``theory <NAME|path>``,
    signature declaration lines, ``unknown ...``, ``goal ... |- ...``.
    ``resolver`` maps a path to file text for includes.
    """
    lines = src.splitlines()
    header: list[str] = []
    sexp_start = None
    for i, raw in enumerate(lines):
        if raw.lstrip().startswith("("):
            sexp_start = i
            break
        header.append(raw)
    if sexp_start is None:
        raise ParseError("proof file has no derivation")

    sig = base
    theory_names: list[str] = []
    decl_lines: list[str] = []
    goal_src = None
    axiom_hyps: list[Prop] = []
    for raw in header:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "signature":
            if rest == "builtin:arith":
                sig = _theories.builtin_signature_arith()
            elif resolver is not None:
                sig, _ = parse_signature_text(resolver(rest))
            else:
                raise ParseError(f"cannot resolve signature {rest!r}")
        elif head == "theory":
            theory_names.append(rest)
        elif head == "goal":
            goal_src = rest
        else:
            decl_lines.append(line)

    if sig is None and not decl_lines:
        raise ParseError("proof file declares no signature")
    for tname in theory_names:
        if tname in _theories.THEORY_NAMES:
            thy = _theories.builtin_theory(tname)
        elif resolver is not None:
            thy = parse_theory_text(resolver(tname), tname, sig)
        else:
            raise ParseError(f"cannot resolve theory {tname!r}")
        sig = _merge_signatures(sig, thy.signature) if sig else thy.signature
        axiom_hyps.extend(p for _, p in thy.axioms)
    sig, ctx = parse_signature_text("\n".join(decl_lines), sig)
    if goal_src is None:
        raise ParseError("proof file declares no goal")
    stated_goal = parse_sequent(goal_src, ctx)
    goal = stated_goal
    if axiom_hyps:
        goal = Sequent(seq_add(goal.left, axiom_hyps), goal.right)

    sexp_src = "\n".join(lines[sexp_start:])
    node = _parse_sexp(sexp_src)
    deriv = _node_to_derivation(node, goal, ctx)
    return ProofFile(sig, ctx, goal, deriv, theory_names, stated_goal)


def _merge_signatures(s1: Signature, s2: Signature) -> Signature:
    return s1.extend(
        name_sorts=[s for s in s2.name_sorts if s not in s1.name_sorts],
        base_sorts=[s for s in s2.base_sorts if s not in s1.base_sorts],
        term_formers=[f for f in s2.term_formers if f not in s1.term_formers],
        prop_formers=[f for f in s2.prop_formers if f not in s1.prop_formers],
    )


@dataclass
class _SNode:
    tag: str
    args: dict[str, str]
    children: list["_SNode"]


def _parse_sexp(src: str) -> _SNode:
    tokens = re.findall(r'"(?:[^"\\]|\\.)*"|[()]|[^\s()"]+', src)
    pos = 0

    def parse() -> _SNode:
        nonlocal pos
        if tokens[pos] != "(":
            raise ParseError(f"expected ( in proof body, got {tokens[pos]!r}")
        pos += 1
        tag = tokens[pos]
        pos += 1
        if tag not in _RULE_TAGS:
            raise ParseError(f"unknown proof rule tag {tag!r}")
        args: dict[str, str] = {}
        children: list[_SNode] = []
        while tokens[pos] != ")":
            tok = tokens[pos]
            if tok.startswith(":"):
                key = tok[1:]
                pos += 1
                val = tokens[pos]
                pos += 1
                if val.startswith('"'):
                    val = val[1:-1].replace('\\"', '"').replace("\\\\", "\\")
                args[key] = val
            elif tok == "(":
                children.append(parse())
            else:
                raise ParseError(f"unexpected token {tok!r} in proof body")
        pos += 1
        return _SNode(tag, args, children)

    node = parse()
    if pos != len(tokens):
        raise ParseError("trailing tokens after the derivation")
    return node


def _find_forall(side: tuple[Prop, ...], xname: str) -> Forall:
    for q in side:
        if isinstance(q, Forall) and q.unknown.name == xname:
            return q
    raise ParseError(f"no quantified formula binding {xname} in the sequent")


def _node_to_derivation(node: _SNode, concl: Sequent, ctx: Context) -> Derivation:
    if "seq" in node.args:
        concl = parse_sequent(node.args["seq"], ctx)
    L, R = concl.left, concl.right
    tag = node.tag

    def child(i: int, seq: Sequent) -> Derivation:
        if i >= len(node.children):
            raise ParseError(f"{tag}: missing premise {i}")
        return _node_to_derivation(node.children[i], seq, ctx)

    if tag == "ax":
        formula = parse_prop(node.args["formula"], ctx)
        perm = parse_perm(node.args.get("perm", "id"), ctx)
        return ax(concl, formula, perm)
    if tag == "botL":
        return bot_l(concl)
    if tag == "impL":
        f = parse_prop(node.args["formula"], ctx)
        if not isinstance(f, Imp):
            raise ParseError("impL principal must be an implication")
        ctx_l = seq_remove(L, f)
        p1 = child(0, Sequent(ctx_l, seq_add(R, [f.left])))
        p2 = child(1, Sequent(seq_add(ctx_l, [f.right]), R))
        return imp_l(concl, f.left, f.right, p1, p2)
    if tag == "impR":
        f = parse_prop(node.args["formula"], ctx)
        if not isinstance(f, Imp):
            raise ParseError("impR principal must be an implication")
        p1 = child(0, Sequent(seq_add(L, [f.left]),
                              seq_add(seq_remove(R, f), [f.right])))
        return imp_r(concl, f.left, f.right, p1)
    if tag == "forallL":
        if "formula" in node.args:
            f = parse_prop(node.args["formula"], ctx)
            if not isinstance(f, Forall):
                raise ParseError("forallL principal must be a quantification")
        else:
            f = _find_forall(L, node.args["X"])
        witness = parse_term(node.args["witness"], ctx)
        inst = subst_apply(subst_single(f.unknown, witness), f.body)
        p1 = child(0, Sequent(seq_add(seq_remove(L, f), [inst]), R))
        return forall_l(concl, f.unknown, f.body, witness, p1)
    if tag == "forallR":
        if "formula" in node.args:
            f = parse_prop(node.args["formula"], ctx)
            if not isinstance(f, Forall):
                raise ParseError("forallR principal must be a quantification")
        else:
            f = _find_forall(R, node.args["X"])
        p1 = child(0, Sequent(L, seq_add(seq_remove(R, f), [f.body])))
        return forall_r(concl, f.unknown, f.body, p1)
    if tag == "cut":
        f = parse_prop(node.args["formula"], ctx)
        p1 = child(0, Sequent(L, seq_add(R, [f])))
        p2 = child(1, Sequent(seq_add(L, [f]), R))
        return cut(concl, f, p1, p2)
    raise ParseError(f"unknown rule tag {tag!r}")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def print_derivation(d: Derivation, sig: Optional[Signature] = None,
                     indent: int = 0) -> str:
    pad = "  " * indent
    args = [f":seq {_quote(print_sequent(d.conclusion, sig))}"]
    if d.rule == "ax":
        args.append(f":formula {_quote(print_prop(d.formula, sig))}")
        args.append(f":perm {_quote(print_perm(d.perm))}")
    elif d.rule in ("impL", "impR"):
        args.append(f":formula {_quote(print_prop(Imp(d.phi, d.psi), sig))}")
    elif d.rule == "forallL":
        args.append(f":X {d.unknown.name}")
        args.append(f":formula {_quote(print_prop(Forall(d.unknown, d.body), sig))}")
        args.append(f":witness {_quote(print_term(d.witness, sig))}")
    elif d.rule == "forallR":
        args.append(f":X {d.unknown.name}")
        args.append(f":formula {_quote(print_prop(Forall(d.unknown, d.body), sig))}")
    elif d.rule == "cut":
        args.append(f":formula {_quote(print_prop(d.formula, sig))}")
    head = f"{pad}({d.rule} " + " ".join(args)
    if not d.premises:
        return head + ")"
    parts = [head]
    for p in d.premises:
        parts.append(print_derivation(p, sig, indent + 1))
    return "\n".join(parts) + ")"


def print_proof_file(pf: ProofFile, goal: Optional[Sequent] = None) -> str:
    expected = _theories.builtin_signature_arith()
    for t in pf.theories:
        if t in _theories.THEORY_NAMES:
            expected = _merge_signatures(expected, _theories.builtin_theory(t).signature)
    if pf.signature == expected:
        lines = ["signature builtin:arith"]
    else:
        lines = [line for line in print_signature(pf.signature).splitlines()]
    for t in pf.theories:
        lines.append(f"theory {t}")
    for x in sorted(pf.context.unknowns.values(), key=lambda u: u.name):
        lines.append(
            f"unknown {x.name} : {print_sort(x.sort)} / {print_atomset(x.pmss, pf.signature)}"
        )
    lines.append(f"goal {print_sequent(goal or pf.stated_goal or pf.goal, pf.signature)}")
    lines.append("")
    lines.append(print_derivation(pf.derivation, pf.signature))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Object first-order syntax (.fol files)

class _FolParser(_Parser):
    def fol_term(self):
        left = self.fol_factor()
        while self.eat("+"):
            left = _theories.FPlus(left, self.fol_factor())
        return left

    def fol_factor(self):
        left = self.fol_base()
        while self.eat("*"):
            left = _theories.FTimes(left, self.fol_base())
        return left

    def fol_base(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of first-order term")
        if tok.kind == "atom":
            return _theories.FVar(self.atom())
        if tok.text == "0":
            self.next()
            return _theories.FZero()
        if tok.text == "succ":
            self.next()
            self.expect("(")
            t = self.fol_term()
            self.expect(")")
            return _theories.FSucc(t)
        if self.eat("("):
            t = self.fol_term()
            self.expect(")")
            return t
        raise ParseError(f"cannot parse a first-order term at {tok.text!r}")

    def fol_formula(self):
        if self.at("forall"):
            self.next()
            a = self.atom()
            self.expect(".")
            return _theories.FAll(a, self.fol_formula())
        left = self.fol_atomic()
        if self.eat("->"):
            return _theories.FImp(left, self.fol_formula())
        return left

    def fol_atomic(self):
        if self.eat("false"):
            return _theories.FBot()
        if self.at("("):
            mark = self.save()
            self.next()
            try:
                f = self.fol_formula()
                self.expect(")")
                if self.eat("->"):
                    return _theories.FImp(f, self.fol_formula())
                return f
            except ParseError:
                self.restore(mark)
        t = self.fol_term()
        self.expect("=")
        return _theories.FEq(t, self.fol_term())

    def fol_sequent(self):
        left = []
        if not self.at("|-"):
            left.append(self.fol_formula())
            while self.eat(","):
                left.append(self.fol_formula())
        self.expect("|-")
        right = []
        if not self.done():
            right.append(self.fol_formula())
            while self.eat(","):
                right.append(self.fol_formula())
        return left, right


def parse_fol_term(src: str, ctx: Context):
    p = _FolParser(tokenize(src), ctx)
    out = p.fol_term()
    if not p.done():
        raise ParseError(f"trailing input in first-order term at {p.peek().text!r}")
    return out


def parse_fol_formula(src: str, ctx: Context):
    p = _FolParser(tokenize(src), ctx)
    out = p.fol_formula()
    if not p.done():
        raise ParseError(f"trailing input in first-order formula at {p.peek().text!r}")
    return out


def parse_fol_sequent(src: str, ctx: Context):
    body = " ".join(
        line for line in src.splitlines() if line.strip() and not line.strip().startswith("#")
    )
    p = _FolParser(tokenize(body), ctx)
    out = p.fol_sequent()
    if not p.done():
        raise ParseError(f"trailing input in first-order sequent at {p.peek().text!r}")
    return out
