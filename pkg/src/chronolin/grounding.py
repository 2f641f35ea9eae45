"""Instantiate parsed PDDL over typed objects and normalize to LNF."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .lnf import LinearExpr, NonlinearError, NumericCondition, Q, Relation, normalize_lnf
from .pddl import (CondEffectAst, DomainAst, DurativeActionAst, InputError,
                   ProblemAst, TimedCond, TimedEff, UnsupportedConstructError)
from .task import (CondEffect, GroundAction, GroundedTask, Metric,
                   NumericEffect, Til)


class TypeMismatchError(Exception):
    pass


class GroundingBlowupError(Exception):
    pass


_COMPLEMENT = {Relation.GE: Relation.LT, Relation.GT: Relation.LE,
               Relation.LE: Relation.GT, Relation.LT: Relation.GE}


def _type_table(dom: DomainAst) -> dict[str, set[str]]:
    parents = {t: p for t, p in dom.types}
    parents.setdefault("object", "object")
    table: dict[str, set[str]] = {}
    for t in set(parents) | {p for p in parents.values()} | {"object"}:
        seen = {t}
        cur = t
        while cur != "object":
            cur = parents.get(cur, "object")
            if cur in seen:
                raise TypeMismatchError(f"cyclic type hierarchy at {cur}")
            seen.add(cur)
        table[t] = seen | {"object"}
    return table


def _subst_atom(atom, binding) -> tuple:
    return tuple(binding.get(x, x) for x in atom)


def _subst_tree(tree, binding):
    op = tree[0]
    if op == "fl":
        return ("fl", _subst_atom(tree[1], binding))
    if op in ("num", "dur"):
        return tree
    if op == "neg":
        return ("neg", _subst_tree(tree[1], binding))
    return (op, _subst_tree(tree[1], binding), _subst_tree(tree[2], binding))


def _tree_fluents(tree, acc: set):
    op = tree[0]
    if op == "fl":
        acc.add(tree[1])
    elif op == "neg":
        _tree_fluents(tree[1], acc)
    elif op not in ("num", "dur"):
        _tree_fluents(tree[1], acc)
        _tree_fluents(tree[2], acc)


def _tree_has_duration(tree) -> bool:
    op = tree[0]
    if op == "dur":
        return True
    if op in ("num", "fl"):
        return False
    if op == "neg":
        return _tree_has_duration(tree[1])
    return _tree_has_duration(tree[1]) or _tree_has_duration(tree[2])


@dataclass
class _RawGround:
    """A schema instantiated over objects, before LNF normalization."""
    name: str
    schema: DurativeActionAst
    duration: list
    conditions: list[TimedCond]
    effects: list[TimedEff]
    cont: list
    cond_effects: list[CondEffectAst]


def _instantiate(schema: DurativeActionAst, binding: dict) -> _RawGround:
    def g_cond(c: TimedCond) -> TimedCond:
        if c.kind == "lit":
            return TimedCond(c.when, "lit", atom=_subst_atom(c.atom, binding))
        return TimedCond(c.when, "cmp", relation=c.relation,
                         lhs=_subst_tree(c.lhs, binding),
                         rhs=_subst_tree(c.rhs, binding))

    def g_eff(e: TimedEff) -> TimedEff:
        return TimedEff(e.when, e.kind,
                        atom=_subst_atom(e.atom, binding),
                        op=e.op,
                        expr=_subst_tree(e.expr, binding) if e.expr else None)

    args = [binding[v] for v, _ in schema.params]
    name = " ".join([schema.name] + args)
    return _RawGround(
        name=name, schema=schema,
        duration=[(rel, _subst_tree(e, binding)) for rel, e in schema.duration],
        conditions=[g_cond(c) for c in schema.conditions],
        effects=[g_eff(e) for e in schema.effects],
        cont=[(s, _subst_atom(fl, binding), _subst_tree(r, binding))
              for s, fl, r in schema.cont],
        cond_effects=[CondEffectAst([g_cond(c) for c in ce.conditions],
                                    g_eff(ce.effect))
                      for ce in schema.cond_effects])


def _referenced_fluents(raw: _RawGround) -> set:
    acc: set = set()
    for _, e in raw.duration:
        _tree_fluents(e, acc)
    for c in raw.conditions:
        if c.kind == "cmp":
            _tree_fluents(c.lhs, acc)
            _tree_fluents(c.rhs, acc)
    for e in raw.effects:
        if e.kind == "num":
            acc.add(e.atom)
            _tree_fluents(e.expr, acc)
    for _, fl, r in raw.cont:
        acc.add(fl)
        _tree_fluents(r, acc)
    for ce in raw.cond_effects:
        for c in ce.conditions:
            if c.kind == "cmp":
                _tree_fluents(c.lhs, acc)
                _tree_fluents(c.rhs, acc)
        acc.add(ce.effect.atom)
        _tree_fluents(ce.effect.expr, acc)
    return acc


def _affected_fluents(raw: _RawGround) -> set:
    acc = {e.atom for e in raw.effects if e.kind == "num"}
    acc |= {fl for _, fl, _ in raw.cont}
    acc |= {ce.effect.atom for ce in raw.cond_effects}
    return acc


def ground(dom: DomainAst, prob: ProblemAst, max_ground_actions: int = 10 ** 6) -> GroundedTask:
    types = _type_table(dom)
    objects: dict[str, list[str]] = {}
    for name, ty in list(dom.constants) + list(prob.objects):
        if ty not in types:
            raise TypeMismatchError(f"object {name} has undeclared type {ty}")
        objects.setdefault(name, []).append(ty)

    def objects_of(ty: str) -> list[str]:
        if ty not in types:
            raise TypeMismatchError(f"undeclared type {ty}")
        return sorted(n for n, tys in objects.items()
                      if any(ty in types[t] for t in tys))

    # instantiate schemas over type-compatible objects
    raws: list[_RawGround] = []
    for schema in dom.actions:
        domains = [objects_of(t) for _, t in schema.params]
        for combo in itertools.product(*domains):
            if len(raws) > max_ground_actions:
                raise GroundingBlowupError(
                    f"more than {max_ground_actions} ground actions")
            binding = {v: o for (v, _), o in zip(schema.params, combo)}
            raws.append(_instantiate(schema, binding))

    init_assigned = {atom: val for atom, val in prob.init_fluents}
    if len(init_assigned) != len(prob.init_fluents):
        raise InputError("duplicate fluent assignment in :init")

    # fluents with no initial value: prune every action that mentions them
    def mentions_undefined(raw: _RawGround) -> bool:
        return any(f not in init_assigned and f != ("total-time",)
                   for f in _referenced_fluents(raw))

    affected_all: set = set()
    for raw in raws:
        affected_all |= _affected_fluents(raw)
    for f in affected_all:
        if f not in init_assigned:
            raise InputError(f"fluent ({' '.join(f)}) has effects but no initial value")
    raws = [r for r in raws if not mentions_undefined(r)]

    # propositional relaxed reachability, snap-wise: start effects become
    # available once start+invariant facts are reachable; end effects need
    # the end facts too.  Actions whose end can never fire can never sit in
    # a completed plan, so they are pruned as well.
    facts = set(prob.init_props) | {a for _, pos, a in prob.tils if pos}
    start_ok = [False] * len(raws)
    end_ok = [False] * len(raws)
    changed = True
    while changed:
        changed = False
        for i, raw in enumerate(raws):
            if not start_ok[i]:
                pres = {c.atom for c in raw.conditions
                        if c.kind == "lit" and c.when in ("start", "inv")}
                if pres <= facts:
                    start_ok[i] = True
                    changed = True
                    facts |= {e.atom for e in raw.effects
                              if e.kind == "add" and e.when == "start"}
            if start_ok[i] and not end_ok[i]:
                pres = {c.atom for c in raw.conditions
                        if c.kind == "lit" and c.when == "end"}
                if pres <= facts:
                    end_ok[i] = True
                    changed = True
                    facts |= {e.atom for e in raw.effects
                              if e.kind == "add" and e.when == "end"}
    raws = [r for i, r in enumerate(raws) if start_ok[i] and end_ok[i]]

    # constant folding: a fluent is constant iff no surviving action affects it
    affected: set = set()
    for raw in raws:
        affected |= _affected_fluents(raw)
    constants = {f: v for f, v in init_assigned.items() if f not in affected}
    fluent_keys = sorted(affected)
    fluent_ids = {f: i for i, f in enumerate(fluent_keys)}

    # goal/metric sanity
    goal_conds = prob.goal
    for c in goal_conds:
        if c.kind == "cmp":
            acc: set = set()
            _tree_fluents(c.lhs, acc)
            _tree_fluents(c.rhs, acc)
            for f in acc:
                if f != ("total-time",) and f not in init_assigned:
                    raise InputError(f"goal refers to undefined fluent ({' '.join(f)})")

    # proposition universe
    prop_keys: set = set(prob.init_props)
    for raw in raws:
        prop_keys |= {c.atom for c in raw.conditions if c.kind == "lit"}
        prop_keys |= {e.atom for e in raw.effects if e.kind in ("add", "del")}
    prop_keys |= {c.atom for c in goal_conds if c.kind == "lit"}
    prop_keys |= {a for _, _, a in prob.tils}
    prop_list = sorted(prop_keys)
    prop_ids = {p: i for i, p in enumerate(prop_list)}

    def lnf(tree) -> LinearExpr:
        return normalize_lnf(tree, constants, fluent_ids)

    def num_cond(c: TimedCond) -> NumericCondition:
        lhs = lnf(c.lhs)
        rhs = lnf(c.rhs)
        cond = NumericCondition.make(lhs - rhs, c.relation, Q(0))
        if cond.expr.duration_coeff != 0:
            raise UnsupportedConstructError("?duration in a condition", "condition")
        return cond

    actions: list[GroundAction] = []
    for raw in raws:
        a = _build_action(raw, len(actions), lnf, num_cond, prop_ids, fluent_ids)
        actions.append(a)

    # goal
    goal_props = frozenset(prop_ids[c.atom] for c in goal_conds if c.kind == "lit")
    goal_num = tuple(num_cond(c) for c in goal_conds if c.kind == "cmp")

    # TILs: merge same-time entries, times strictly increasing
    merged: dict[Q, tuple[set, set]] = {}
    for t, pos, atom in sorted(prob.tils, key=lambda x: x[0]):
        if t <= 0:
            raise InputError("timed initial literals must have positive times")
        adds, dels = merged.setdefault(t, (set(), set()))
        (adds if pos else dels).add(prop_ids[atom])
    tils = [Til(index=i, time=t, adds=frozenset(a), dels=frozenset(d))
            for i, (t, (a, d)) in enumerate(sorted(merged.items()))]

    # metric: LNF over fluents plus total-time (pseudo fluent id -1)
    sense, metric_tree = prob.metric
    metric_ids = dict(fluent_ids)
    metric_ids[("total-time",)] = -1
    try:
        mexpr = normalize_lnf(metric_tree, constants, metric_ids)
    except KeyError as exc:
        raise InputError(f"metric refers to undefined fluent {exc}") from exc
    weights = {f: w for f, w in mexpr.weights if f != -1}
    ttc = dict(mexpr.weights).get(-1, Q(0))
    metric = Metric(sense=sense, weights=weights, total_time_coeff=ttc,
                    constant=mexpr.constant)

    task = GroundedTask(
        propositions=[" ".join(p) for p in prop_list],
        fluents=[" ".join(f) for f in fluent_keys],
        actions=actions,
        init_props=frozenset(prop_ids[p] for p in prob.init_props if p in prop_ids),
        init_fluents={fluent_ids[f]: init_assigned[f] for f in fluent_keys},
        tils=tils,
        goal_props=goal_props,
        goal_num=goal_num,
        metric=metric)
    _resolve_cond_effects(task)
    return task.finalize()


def _build_action(raw: _RawGround, aid: int, lnf, num_cond, prop_ids, fluent_ids) -> GroundAction:
    dur_eqs, dur_lbs, dur_ubs = [], [], []
    for rel, tree in raw.duration:
        e = lnf(tree)
        if e.duration_coeff != 0:
            raise UnsupportedConstructError("?duration inside a duration bound", raw.name)
        if rel is Relation.EQ:
            dur_eqs.append(e)
        elif rel in (Relation.GE, Relation.GT):
            dur_lbs.append((e, rel.strict))
        else:
            dur_ubs.append((e, rel.strict))

    pre = {"start": (set(), []), "inv": (set(), []), "end": (set(), [])}
    for c in raw.conditions:
        props, nums = pre[c.when]
        if c.kind == "lit":
            props.add(prop_ids[c.atom])
        else:
            nums.append(num_cond(c))

    eff = {"start": (set(), set(), []), "end": (set(), set(), [])}
    for e in raw.effects:
        adds, dels, nums = eff[e.when]
        if e.kind == "add":
            adds.add(prop_ids[e.atom])
        elif e.kind == "del":
            dels.add(prop_ids[e.atom])
        else:
            nums.append(NumericEffect(fluent_ids[e.atom], e.op, lnf(e.expr)))

    # gradients on the same fluent within one action are pre-summed
    grads: dict[int, Q] = {}
    for sign, fl, rate_tree in raw.cont:
        rate = lnf(rate_tree)
        if not rate.is_constant:
            raise NonlinearError(
                f"continuous effect rate must fold to a constant in {raw.name}")
        k = rate.constant if sign == "+" else -rate.constant
        f = fluent_ids[fl]
        grads[f] = grads.get(f, Q(0)) + k
    cont = tuple(sorted((f, k) for f, k in grads.items() if k != 0))

    cond_effects = []
    for ce in raw.cond_effects:
        conds = []
        for c in ce.conditions:
            if c.kind == "lit":
                conds.append((c.when, prop_ids[c.atom]))
            else:
                lhs = lnf(c.lhs) - lnf(c.rhs)
                conds.append((c.when, NumericCondition.make(lhs, c.relation, Q(0))))
        effect = NumericEffect(fluent_ids[ce.effect.atom], ce.effect.op,
                               lnf(ce.effect.expr))
        cond_effects.append(CondEffect(tuple(conds), ce.effect.when, effect))

    return GroundAction(
        id=aid, name=raw.name,
        dur_eqs=dur_eqs, dur_lbs=dur_lbs, dur_ubs=dur_ubs,
        pre_start=frozenset(pre["start"][0]), pre_start_num=tuple(pre["start"][1]),
        inv=frozenset(pre["inv"][0]), inv_num=tuple(pre["inv"][1]),
        pre_end=frozenset(pre["end"][0]), pre_end_num=tuple(pre["end"][1]),
        add_start=frozenset(eff["start"][0]), del_start=frozenset(eff["start"][1]),
        num_start=tuple(eff["start"][2]),
        add_end=frozenset(eff["end"][0]), del_end=frozenset(eff["end"][1]),
        num_end=tuple(eff["end"][2]),
        cont=cont, cond_effects=tuple(cond_effects))


def _resolve_cond_effects(task: GroundedTask) -> None:
    """Keep conditional effects only on metric-tracking fluents; compile the
    rest away into action variants (numeric conditions only, at most two
    conditional effects per action)."""
    from .task import detect_metric_tracking
    tracking = detect_metric_tracking(task)
    new_actions = []
    next_id = 0
    for a in task.actions:
        bad = [ce for ce in a.cond_effects if ce.effect.fluent not in tracking]
        if not bad:
            import dataclasses
            new_actions.append(dataclasses.replace(a, id=next_id))
            next_id += 1
            continue
        if len(a.cond_effects) > 2:
            raise UnsupportedConstructError(
                "more than two compiled conditional effects", a.name)
        if any(not isinstance(c[1], NumericCondition)
               for ce in a.cond_effects for c in ce.conditions):
            raise UnsupportedConstructError(
                "propositional conditional effect on a non-metric fluent", a.name)
        for variant in _compile_variants(a):
            variant.id = next_id
            next_id += 1
            new_actions.append(variant)
    task.actions = new_actions


def _compile_variants(a: GroundAction) -> list[GroundAction]:
    import dataclasses
    variants = [dataclasses.replace(a, cond_effects=())]
    for idx, ce in enumerate(a.cond_effects):
        expanded = []
        for base in variants:
            for take in (True, False):
                conds = []
                for when, cond in ce.conditions:
                    c = cond if take else NumericCondition(
                        cond.expr, _COMPLEMENT[cond.relation], cond.rhs)
                    if c.relation is Relation.EQ and not take:
                        raise UnsupportedConstructError(
                            "negated equality conditional effect", a.name)
                    conds.append((when, c))
                v = _add_conds(base, conds, f"{a.name} when{idx}={int(take)}")
                if take:
                    v = _add_effect(v, ce)
                expanded.append(v)
        variants = expanded
    return variants


def _add_conds(a: GroundAction, conds, name: str) -> GroundAction:
    import dataclasses
    pre_s, inv, pre_e = list(a.pre_start_num), list(a.inv_num), list(a.pre_end_num)
    lbs, ubs, eqs = list(a.dur_lbs), list(a.dur_ubs), list(a.dur_eqs)
    for when, c in conds:
        if c.expr.duration_coeff != 0:
            # a pure ?duration comparison becomes a duration constraint
            scaled = c.expr.scale(Q(1) / c.expr.duration_coeff)
            if scaled.weights:
                raise UnsupportedConstructError(
                    "mixed duration/fluent conditional effect condition", name)
            bound = LinearExpr.const(c.rhs / c.expr.duration_coeff)
            rel = c.relation if c.expr.duration_coeff > 0 else c.relation.flip()
            if rel is Relation.EQ:
                eqs.append(bound)
            elif rel in (Relation.GE, Relation.GT):
                lbs.append((bound, rel.strict))
            else:
                ubs.append((bound, rel.strict))
        elif when == "start":
            pre_s.append(c)
        elif when == "inv":
            inv.append(c)
        else:
            pre_e.append(c)
    return dataclasses.replace(a, name=name, pre_start_num=tuple(pre_s),
                               inv_num=tuple(inv), pre_end_num=tuple(pre_e),
                               dur_lbs=lbs, dur_ubs=ubs, dur_eqs=eqs)


def _add_effect(a: GroundAction, ce: CondEffect) -> GroundAction:
    import dataclasses
    if ce.when == "start":
        return dataclasses.replace(a, num_start=a.num_start + (ce.effect,))
    return dataclasses.replace(a, num_end=a.num_end + (ce.effect,))
