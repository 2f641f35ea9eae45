"""Parser for the supported PDDL2.1 subset.

Covers typed durative actions with duration (in)equalities, at-start /
over-all / at-end conditions, discrete and ``#t`` continuous numeric
effects, restricted ``when`` conditional effects, timed initial literals
and ``:metric``.  Identifiers are case-insensitive and lowered; numbers
are kept as exact rationals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .lnf import Q, Relation

_NUM_RE = re.compile(r"^-?\d+(\.\d+)?$")


class PddlSyntaxError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{msg} (line {line}, column {col})" if line else msg)
        self.line = line
        self.col = col


class UnsupportedConstructError(Exception):
    def __init__(self, construct: str, where: str = ""):
        suffix = f" in {where}" if where else ""
        super().__init__(f"unsupported construct: {construct}{suffix}")
        self.construct = construct


class InputError(Exception):
    """Ill-formed but syntactically valid input (duplicate init, bad reference...)."""


# ---------------------------------------------------------------- s-expressions

@dataclass
class Tok:
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[Tok]:
    toks: list[Tok] = []
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        ch = text[i]
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch in "()":
            toks.append(Tok(ch, line, col))
            i += 1
            col += 1
            continue
        j = i
        while j < n and text[j] not in " \t\r\n();":
            j += 1
        toks.append(Tok(text[i:j].lower(), line, col))
        col += j - i
        i = j
    return toks


def read_sexprs(text: str):
    """Parse text into nested lists of strings (plus position info on lists)."""
    toks = _tokenize(text)
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(toks):
            raise PddlSyntaxError("unexpected end of input")
        tok = toks[pos]
        if tok.text == "(":
            pos += 1
            items = []
            while True:
                if pos >= len(toks):
                    raise PddlSyntaxError("missing closing parenthesis",
                                          tok.line, tok.col)
                if toks[pos].text == ")":
                    pos += 1
                    return items
                items.append(parse())
        if tok.text == ")":
            raise PddlSyntaxError("unbalanced parenthesis", tok.line, tok.col)
        pos += 1
        return tok.text

    out = []
    while pos < len(toks):
        out.append(parse())
    return out


# ---------------------------------------------------------------- AST types

Atom = tuple  # (name, arg, arg, ...), args are object names or ?variables


@dataclass
class TimedCond:
    when: str                 # 'start' | 'inv' | 'end'
    kind: str                 # 'lit' | 'cmp'
    atom: Atom | None = None
    relation: Relation | None = None
    lhs: tuple | None = None  # expression tree
    rhs: tuple | None = None


@dataclass
class TimedEff:
    when: str                 # 'start' | 'end'
    kind: str                 # 'add' | 'del' | 'num'
    atom: Atom | None = None
    op: str | None = None     # '+=' | '-=' | '=' for kind 'num'
    expr: tuple | None = None


@dataclass
class CondEffectAst:
    conditions: list[TimedCond]
    effect: TimedEff


@dataclass
class DurativeActionAst:
    name: str
    params: list[tuple[str, str]]               # (?var, type)
    duration: list[tuple[Relation, tuple]]      # rel, expr tree (rhs of ?duration rel e)
    conditions: list[TimedCond] = field(default_factory=list)
    effects: list[TimedEff] = field(default_factory=list)
    cont: list[tuple[str, Atom, tuple]] = field(default_factory=list)  # (sign, fluent, rate tree)
    cond_effects: list[CondEffectAst] = field(default_factory=list)


@dataclass
class DomainAst:
    name: str
    types: list[tuple[str, str]]                # (type, parent)
    predicates: list[tuple[str, list[tuple[str, str]]]]
    functions: list[tuple[str, list[tuple[str, str]]]]
    constants: list[tuple[str, str]]
    actions: list[DurativeActionAst]


@dataclass
class ProblemAst:
    name: str
    domain_name: str
    objects: list[tuple[str, str]]
    init_props: list[Atom]
    init_fluents: list[tuple[Atom, Q]]
    tils: list[tuple[Q, bool, Atom]]            # (time, is_add, atom)
    goal: list[TimedCond]                       # when field unused ('end')
    metric: tuple[str, tuple] | None            # ('minimize'|'maximize', expr tree)


# ---------------------------------------------------------------- helpers

_REL = {">=": Relation.GE, ">": Relation.GT, "=": Relation.EQ,
        "<": Relation.LT, "<=": Relation.LE}

_UNSUPPORTED = {"forall", "exists", "imply", "or", "scale-up", "scale-down",
                ":process", ":event", ":derived", ":action"}


def _is_number(s) -> bool:
    return isinstance(s, str) and bool(_NUM_RE.match(s))


def parse_expr(sx) -> tuple:
    """Arithmetic s-expression -> expression tree."""
    if isinstance(sx, str):
        if _is_number(sx):
            return ("num", Q(sx))
        if sx == "?duration":
            return ("dur",)
        if sx == "total-time":
            return ("fl", ("total-time",))
        raise PddlSyntaxError(f"bare symbol {sx!r} in numeric expression")
    if not sx:
        raise PddlSyntaxError("empty numeric expression")
    head = sx[0]
    if head in ("+", "-", "*", "/"):
        args = [parse_expr(a) for a in sx[1:]]
        if head == "-" and len(args) == 1:
            return ("neg", args[0])
        if len(args) < 2:
            raise PddlSyntaxError(f"operator {head} needs two operands")
        tree = args[0]
        for a in args[1:]:
            tree = (head, tree, a)
        return tree
    if head == "?duration":
        raise PddlSyntaxError("?duration is not a function")
    # fluent term (f arg...)
    return ("fl", tuple(sx))


def _parse_literal(sx) -> tuple[bool, Atom]:
    if sx and sx[0] == "not":
        pos, atom = _parse_literal(sx[1])
        return (not pos, atom)
    return True, tuple(sx)


def _split_typed(items) -> list[tuple[str, str]]:
    """Parse PDDL typed lists: a b - t c d - u  (default type 'object')."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        if items[i] == "-":
            if i + 1 >= len(items):
                raise PddlSyntaxError("dangling '-' in typed list")
            ty = items[i + 1]
            if not isinstance(ty, str):
                raise PddlSyntaxError("expected type name after '-'")
            out.extend((p, ty) for p in pending)
            pending = []
            i += 2
        else:
            if not isinstance(items[i], str):
                raise PddlSyntaxError("expected name in typed list")
            pending.append(items[i])
            i += 1
    out.extend((p, "object") for p in pending)
    return out


def _parse_condition_item(sx, out: list[TimedCond]):
    if not isinstance(sx, list) or not sx:
        raise PddlSyntaxError("malformed condition")
    head = sx[0]
    if head == "and":
        for item in sx[1:]:
            _parse_condition_item(item, out)
        return
    if head in _UNSUPPORTED:
        raise UnsupportedConstructError(head, "condition")
    if head == "at" and len(sx) == 3 and sx[1] in ("start", "end"):
        when = sx[1]
        body = sx[2]
    elif head == "over" and len(sx) == 3 and sx[1] == "all":
        when = "inv"
        body = sx[2]
    else:
        raise PddlSyntaxError(f"durative condition needs a time specifier: {sx}")
    out.append(_parse_timeless_condition(body, when))


def _parse_timeless_condition(body, when: str) -> TimedCond:
    if not isinstance(body, list) or not body:
        raise PddlSyntaxError("malformed condition body")
    if body[0] in _REL and len(body) == 3:
        # no object equality in this subset: '=' in a condition is numeric
        return TimedCond(when, "cmp", relation=_REL[body[0]],
                         lhs=parse_expr(body[1]), rhs=parse_expr(body[2]))
    if body[0] == "not":
        raise UnsupportedConstructError("negative precondition", "condition")
    if body[0] in _UNSUPPORTED:
        raise UnsupportedConstructError(body[0], "condition")
    return TimedCond(when, "lit", atom=tuple(body))


def _parse_effect_item(sx, action: DurativeActionAst):
    if not isinstance(sx, list) or not sx:
        raise PddlSyntaxError("malformed effect")
    head = sx[0]
    if head == "and":
        for item in sx[1:]:
            _parse_effect_item(item, action)
        return
    if head == "when":
        action.cond_effects.append(_parse_cond_effect(sx))
        return
    if head in ("increase", "decrease") and len(sx) == 3 and _is_t_expr(sx[2]):
        sign = "+" if head == "increase" else "-"
        rate = _t_rate(sx[2])
        action.cont.append((sign, tuple(sx[1]), rate))
        return
    if head == "at" and len(sx) == 3 and sx[1] in ("start", "end"):
        when = sx[1]
        action.effects.extend(_parse_timeless_effect(sx[2], when, action))
        return
    raise PddlSyntaxError(f"durative effect needs a time specifier: {sx}")


def _is_t_expr(sx) -> bool:
    return (isinstance(sx, list) and len(sx) == 3 and sx[0] == "*"
            and ("#t" in (sx[1], sx[2])))


def _t_rate(sx) -> tuple:
    other = sx[2] if sx[1] == "#t" else sx[1]
    return parse_expr(other)


def _parse_timeless_effect(body, when: str, action: DurativeActionAst | None) -> list[TimedEff]:
    if not isinstance(body, list) or not body:
        raise PddlSyntaxError("malformed effect body")
    head = body[0]
    if head == "and":
        out = []
        for item in body[1:]:
            out.extend(_parse_timeless_effect(item, when, action))
        return out
    if head == "when":
        if action is None:
            raise UnsupportedConstructError("nested when", "effect")
        action.cond_effects.append(_parse_cond_effect(body, default_when=when))
        return []
    if head == "not":
        _, atom = _parse_literal(body)
        return [TimedEff(when, "del", atom=atom)]
    if head in ("increase", "decrease", "assign"):
        if len(body) != 3:
            raise PddlSyntaxError(f"malformed numeric effect: {body}")
        if _is_t_expr(body[2]):
            raise PddlSyntaxError("#t effect cannot carry a time specifier")
        op = {"increase": "+=", "decrease": "-=", "assign": "="}[head]
        return [TimedEff(when, "num", atom=tuple(body[1]), op=op,
                         expr=parse_expr(body[2]))]
    if head in ("scale-up", "scale-down"):
        raise UnsupportedConstructError(head, "effect")
    return [TimedEff(when, "add", atom=tuple(body))]


def _parse_cond_effect(sx, default_when: str = "end") -> CondEffectAst:
    if len(sx) != 3:
        raise PddlSyntaxError(f"malformed when clause: {sx}")
    conds: list[TimedCond] = []

    def walk_cond(c):
        if isinstance(c, list) and c and c[0] == "and":
            for item in c[1:]:
                walk_cond(item)
            return
        if isinstance(c, list) and c and c[0] == "at" and len(c) == 3 and c[1] in ("start", "end"):
            conds.append(_parse_timeless_condition(c[2], c[1]))
            return
        if isinstance(c, list) and c and c[0] == "over" and len(c) == 3 and c[1] == "all":
            conds.append(_parse_timeless_condition(c[2], "inv"))
            return
        conds.append(_parse_timeless_condition(c, default_when))

    walk_cond(sx[1])
    effs: list[TimedEff] = []
    eff_body = sx[2]
    if isinstance(eff_body, list) and eff_body and eff_body[0] == "at" \
            and len(eff_body) == 3 and eff_body[1] in ("start", "end"):
        effs = _parse_timeless_effect(eff_body[2], eff_body[1], None)
    else:
        effs = _parse_timeless_effect(eff_body, default_when, None)
    if len(effs) != 1 or effs[0].kind != "num":
        raise UnsupportedConstructError("non-numeric conditional effect", "when")
    return CondEffectAst(conds, effs[0])


def _parse_duration(sx) -> list[tuple[Relation, tuple]]:
    out: list[tuple[Relation, tuple]] = []

    def walk(item):
        if not isinstance(item, list) or not item:
            raise PddlSyntaxError("malformed duration constraint")
        if item[0] == "and":
            for sub in item[1:]:
                walk(sub)
            return
        if item[0] == "at" and len(item) == 3:
            if item[1] == "end":
                raise UnsupportedConstructError("at-end duration constraint", "duration")
            walk(item[2])
            return
        if item[0] in _REL and len(item) == 3 and item[1] == "?duration":
            out.append((_REL[item[0]], parse_expr(item[2])))
            return
        if item[0] in _REL and len(item) == 3 and item[2] == "?duration":
            out.append((_REL[item[0]].flip(), parse_expr(item[1])))
            return
        raise PddlSyntaxError(f"malformed duration constraint: {item}")

    walk(sx)
    return out


# ---------------------------------------------------------------- domain / problem

def parse_domain(text: str) -> DomainAst:
    forms = read_sexprs(text)
    if len(forms) != 1 or not isinstance(forms[0], list):
        raise PddlSyntaxError("expected a single (define ...) form")
    form = forms[0]
    if form[:1] != ["define"] or len(form) < 2 or form[1][:1] != ["domain"]:
        raise PddlSyntaxError("expected (define (domain ...) ...)")
    dom = DomainAst(name=form[1][1], types=[], predicates=[], functions=[],
                    constants=[], actions=[])
    for section in form[2:]:
        if not isinstance(section, list) or not section:
            raise PddlSyntaxError("malformed domain section")
        key = section[0]
        if key == ":requirements":
            continue
        if key == ":types":
            dom.types = _split_typed(section[1:])
        elif key == ":constants":
            dom.constants = _split_typed(section[1:])
        elif key == ":predicates":
            for p in section[1:]:
                dom.predicates.append((p[0], _split_typed(p[1:])))
        elif key == ":functions":
            for f in section[1:]:
                if isinstance(f, list):
                    dom.functions.append((f[0], _split_typed(f[1:])))
        elif key == ":durative-action":
            dom.actions.append(_parse_durative_action(section))
        elif key in _UNSUPPORTED or key == ":action":
            raise UnsupportedConstructError(key, f"domain {dom.name}")
        else:
            raise PddlSyntaxError(f"unknown domain section {key}")
    return dom


def _parse_durative_action(section) -> DurativeActionAst:
    name = section[1]
    slots = {}
    i = 2
    while i < len(section):
        key = section[i]
        if not isinstance(key, str) or not key.startswith(":"):
            raise PddlSyntaxError(f"expected keyword in action {name}, got {key}")
        if i + 1 >= len(section):
            raise PddlSyntaxError(f"missing value for {key} in action {name}")
        slots[key] = section[i + 1]
        i += 2
    action = DurativeActionAst(
        name=name,
        params=_split_typed(slots.get(":parameters", [])),
        duration=_parse_duration(slots[":duration"]) if ":duration" in slots else [],
    )
    if not action.duration:
        raise PddlSyntaxError(f"durative action {name} needs a :duration")
    if ":condition" in slots:
        _parse_condition_item(slots[":condition"], action.conditions)
    if ":effect" in slots:
        _parse_effect_item(slots[":effect"], action)
    return action


def parse_problem(text: str) -> ProblemAst:
    forms = read_sexprs(text)
    if len(forms) != 1 or not isinstance(forms[0], list):
        raise PddlSyntaxError("expected a single (define ...) form")
    form = forms[0]
    if form[:1] != ["define"] or len(form) < 2 or form[1][:1] != ["problem"]:
        raise PddlSyntaxError("expected (define (problem ...) ...)")
    prob = ProblemAst(name=form[1][1], domain_name="", objects=[],
                      init_props=[], init_fluents=[], tils=[], goal=[], metric=None)
    seen_fluents: set[Atom] = set()
    for section in form[2:]:
        key = section[0]
        if key == ":domain":
            prob.domain_name = section[1]
        elif key == ":objects":
            prob.objects = _split_typed(section[1:])
        elif key == ":init":
            for item in section[1:]:
                _parse_init_item(item, prob, seen_fluents)
        elif key == ":goal":
            def walk_goal(g):
                if isinstance(g, list) and g and g[0] == "and":
                    for sub in g[1:]:
                        walk_goal(sub)
                    return
                prob.goal.append(_parse_timeless_condition(g, "end"))
            walk_goal(section[1])
        elif key == ":metric":
            if len(section) != 3 or section[1] not in ("minimize", "maximize"):
                raise PddlSyntaxError("malformed :metric")
            prob.metric = (section[1], parse_expr(section[2]))
        else:
            raise PddlSyntaxError(f"unknown problem section {key}")
    if prob.metric is None:
        prob.metric = ("minimize", ("fl", ("total-time",)))
    return prob


def _parse_init_item(item, prob: ProblemAst, seen_fluents: set):
    if not isinstance(item, list) or not item:
        raise PddlSyntaxError("malformed init entry")
    head = item[0]
    if head == "=" and len(item) == 3:
        atom = tuple(item[1])
        if not _is_number(item[2]):
            raise PddlSyntaxError(f"fluent init must be a number: {item}")
        if atom in seen_fluents:
            raise InputError(f"duplicate init assignment for fluent {atom}")
        seen_fluents.add(atom)
        prob.init_fluents.append((atom, Q(item[2])))
        return
    if head == "at" and len(item) == 3 and _is_number(item[1]):
        t = Q(item[1])
        if t < 0:
            raise InputError(f"timed initial literal with negative time: {item}")
        pos, atom = _parse_literal(item[2])
        prob.tils.append((t, pos, atom))
        return
    if head == "not":
        return  # closed world: explicit negated init facts are no-ops
    prob.init_props.append(tuple(item))


# ---------------------------------------------------------------- unparse

def _fmt_num(q: Q) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d == 1:  # exact decimal expansion exists
        shift = max(twos, fives)
        scaled = q.numerator * (10 ** shift) // q.denominator
        text = str(abs(scaled)).rjust(shift + 1, "0")
        sign = "-" if q < 0 else ""
        return f"{sign}{text[:-shift]}.{text[-shift:]}"
    return f"(/ {q.numerator} {q.denominator})"


def _unparse_expr(tree) -> str:
    op = tree[0]
    if op == "num":
        return _fmt_num(tree[1])
    if op == "fl":
        return "(" + " ".join(tree[1]) + ")"
    if op == "dur":
        return "?duration"
    if op == "neg":
        return f"(- 0 {_unparse_expr(tree[1])})"
    return f"({op} {_unparse_expr(tree[1])} {_unparse_expr(tree[2])})"


def _unparse_cond(c: TimedCond) -> str:
    body = ("(" + " ".join(c.atom) + ")" if c.kind == "lit"
            else f"({c.relation.value} {_unparse_expr(c.lhs)} {_unparse_expr(c.rhs)})")
    wrap = {"start": "at start", "inv": "over all", "end": "at end"}[c.when]
    return f"({wrap} {body})"


def _unparse_eff(e: TimedEff) -> str:
    if e.kind == "add":
        body = "(" + " ".join(e.atom) + ")"
    elif e.kind == "del":
        body = "(not (" + " ".join(e.atom) + "))"
    else:
        word = {"+=": "increase", "-=": "decrease", "=": "assign"}[e.op]
        body = f"({word} ({' '.join(e.atom)}) {_unparse_expr(e.expr)})"
    return f"(at {e.when} {body})"


def unparse_domain(dom: DomainAst) -> str:
    out = [f"(define (domain {dom.name})"]
    if dom.types:
        out.append("  (:types " + " ".join(f"{n} - {t}" for n, t in dom.types) + ")")
    if dom.constants:
        out.append("  (:constants " + " ".join(f"{n} - {t}" for n, t in dom.constants) + ")")
    if dom.predicates:
        preds = " ".join(
            "(" + " ".join([p] + [f"{v} - {t}" for v, t in args]) + ")"
            for p, args in dom.predicates)
        out.append(f"  (:predicates {preds})")
    if dom.functions:
        funcs = " ".join(
            "(" + " ".join([f] + [f"{v} - {t}" for v, t in args]) + ")"
            for f, args in dom.functions)
        out.append(f"  (:functions {funcs})")
    for a in dom.actions:
        out.append(f"  (:durative-action {a.name}")
        out.append("    :parameters (" + " ".join(f"{v} - {t}" for v, t in a.params) + ")")
        dur = " ".join(f"({rel.value} ?duration {_unparse_expr(e)})" for rel, e in a.duration)
        out.append(f"    :duration {dur if len(a.duration) == 1 else '(and ' + dur + ')'}")
        conds = " ".join(_unparse_cond(c) for c in a.conditions)
        out.append(f"    :condition (and {conds})")
        effs = [_unparse_eff(e) for e in a.effects]
        effs += [f"({'increase' if s == '+' else 'decrease'} ({' '.join(fl)}) (* #t {_unparse_expr(r)}))"
                 for s, fl, r in a.cont]
        for ce in a.cond_effects:
            cond = " ".join(_unparse_cond(c) for c in ce.conditions)
            cond = cond if len(ce.conditions) == 1 else f"(and {cond})"
            effs.append(f"(when {cond} {_unparse_eff(ce.effect)})")
        out.append(f"    :effect (and {' '.join(effs)}))")
    out.append(")")
    return "\n".join(out)


def unparse_problem(prob: ProblemAst) -> str:
    out = [f"(define (problem {prob.name})", f"  (:domain {prob.domain_name})"]
    if prob.objects:
        out.append("  (:objects " + " ".join(f"{n} - {t}" for n, t in prob.objects) + ")")
    init = ["(" + " ".join(p) + ")" for p in prob.init_props]
    init += [f"(= ({' '.join(a)}) {_fmt_num(v)})" for a, v in prob.init_fluents]
    init += [f"(at {_fmt_num(t)} " + ("(" + " ".join(a) + ")" if pos
             else "(not (" + " ".join(a) + "))") + ")" for t, pos, a in prob.tils]
    out.append("  (:init " + " ".join(init) + ")")
    goals = " ".join(
        "(" + " ".join(g.atom) + ")" if g.kind == "lit"
        else f"({g.relation.value} {_unparse_expr(g.lhs)} {_unparse_expr(g.rhs)})"
        for g in prob.goal)
    out.append(f"  (:goal (and {goals}))")
    if prob.metric:
        out.append(f"  (:metric {prob.metric[0]} {_unparse_expr(prob.metric[1])})")
    out.append(")")
    return "\n".join(out)
