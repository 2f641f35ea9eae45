"""Post-hoc plan optimisation: greedy partial-order lifting, then a MILP
over the final plan's LP that reschedules (and re-durations) the actions to
minimise the task metric.

Binary switch columns model conditional effects: timed-literal windows get
interval membership encodings, numeric over-all conditions get big-M rows
over every fluent sample point inside the action, and duration-dependent
conditions get threshold switches whose duration-scaled contributions pass
through the binary*continuous linearisation shim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import lp as lpmod
from . import scheduler, validator
from .lnf import LinearExpr, NumericCondition, Q, Relation
from .pddl import UnsupportedConstructError
from .plans import PlanEntry, TimedPlan
from .state import SearchState
from .task import GroundedTask

INF = math.inf


@dataclass
class PartialOrderPlan:
    state: SearchState
    edges: set[tuple[int, int]]          # retained (i, j): step i before step j
    chained: frozenset[int]              # non-metric unstable fluents


@dataclass
class PosthocResult:
    plan: TimedPlan
    metric: float
    improved: bool
    original_metric: float
    status: str = "ok"                   # 'ok' | 'node-limit' | 'fallback'


def _step_sets(state: SearchState, mt: frozenset[int]):
    """Per step: (prop needs, adds, dels, numeric reads, numeric writes)."""
    task = state.task
    out = []
    for st in state.plan:
        snap = st.snap
        reads: set[int] = set()
        writes: set[int] = set()
        for c in snap.pre_num:
            reads |= c.fluents
        for e in snap.num_effects:
            if e.fluent not in mt:
                writes.add(e.fluent)
            reads |= set(e.expr.fluents)
        if snap.kind in ("start", "end"):
            action = task.actions[snap.origin]
            for f, _k in action.cont:
                if f not in mt:
                    writes.add(f)
            if snap.kind == "start":
                for exprs in (action.dur_eqs,
                              [x for x, _ in action.dur_lbs],
                              [x for x, _ in action.dur_ubs]):
                    for x in exprs:
                        reads |= set(x.fluents)
        reads -= mt
        out.append((set(snap.pre), set(snap.adds), set(snap.dels),
                    reads, writes))
    return out


def lift_partial_order(state: SearchState, eps: Q) -> PartialOrderPlan:
    """Keep an ordering edge only where the total order is load-bearing:
    causal links, interference, start/end pairing and TIL anchors."""
    task = state.task
    mt = task.metric_tracking
    n = len(state.plan)
    info = _step_sets(state, mt)
    edges: set[tuple[int, int]] = set()

    chained = frozenset(f for f in state.unstable if f not in mt)
    if chained:
        # flow rows need the full chain once any readable fluent is
        # time-dependent; flexibility then comes from durations alone
        edges |= {(i, i + 1) for i in range(n - 1)}

    # causal links: a fact consumed at j comes from its last producer
    for j in range(n):
        needs = info[j][0]
        for p in needs:
            for i in range(j - 1, -1, -1):
                if p in info[i][1]:
                    edges.add((i, j))
                    break
    # pairing and TIL anchors
    for j, st in enumerate(state.plan):
        if st.snap.kind == "end":
            edges.add((st.pair, j))
        if st.snap.kind == "til":
            for i in range(n):
                if i < j:
                    edges.add((i, j))
                elif i > j:
                    edges.add((j, i))
    # pairwise interference
    for i in range(n):
        needs_i, adds_i, dels_i, reads_i, writes_i = info[i]
        for j in range(i + 1, n):
            needs_j, adds_j, dels_j, reads_j, writes_j = info[j]
            if dels_i & (needs_j | adds_j) or dels_j & (needs_i | adds_i):
                edges.add((i, j))
            elif writes_i & writes_j or writes_i & reads_j or writes_j & reads_i:
                edges.add((i, j))
    # spanning commitments (invariants and continuous writes) pin outside
    # steps to stay outside, inside steps to stay inside
    for i, st in enumerate(state.plan):
        if st.snap.kind != "start":
            continue
        action = task.actions[st.snap.origin]
        j = state.end_step_of(i)
        if j is None:
            continue
        span_facts = set(action.inv)
        span_reads: set[int] = set()
        for c in action.inv_num:
            span_reads |= c.fluents
        span_reads -= mt
        span_writes = {f for f, _ in action.cont if f not in mt}
        for q in range(n):
            if q in (i, j):
                continue
            _, adds_q, dels_q, reads_q, writes_q = info[q]
            conflict = (dels_q & span_facts or writes_q & span_reads
                        or writes_q & span_writes or reads_q & span_writes)
            if not conflict:
                continue
            if q < i:
                edges.add((q, i))
            elif q > j:
                edges.add((j, q))
            else:
                edges.add((i, q))
                edges.add((q, j))
    edges = {(i, j) for (i, j) in edges if i != j}
    return PartialOrderPlan(state, edges, chained)


# ------------------------------------------------------------------- the MILP

@dataclass
class _Milp:
    model: lpmod.LinearProgramModel
    stepcols: list[int]
    horizon: float
    mt_final: dict[int, int] = field(default_factory=dict)
    mt_rows: dict[int, int] = field(default_factory=dict)
    pre: list[dict[int, int]] = field(default_factory=list)
    post: list[dict[int, int]] = field(default_factory=list)
    shim_terms: list[tuple[int, int, float]] = field(default_factory=list)
    n_switches: int = 0


def build_posthoc_milp(pop: PartialOrderPlan, eps: Q) -> _Milp:
    state = pop.state
    task = state.task
    epsf = float(eps)
    n = len(state.plan)
    model = lpmod.LinearProgramModel()
    deltas = scheduler._delta_profiles(state)
    vals = scheduler.stable_valuations(state)
    chained = pop.chained

    horizon = 10.0
    if task.tils:
        horizon += float(task.tils[-1].time)
    for i, st in enumerate(state.plan):
        if st.snap.kind == "end":
            dmax = st.dmax
            horizon += float(dmax) if dmax != math.inf else 3.0 * float(st.dmin) + 10.0
    horizon = max(horizon, 2 * sum(float(st.dmin or 0) for st in state.plan) + 10.0)

    stepcols = [model.add_col(f"step{i}", lb=0.0, ub=horizon) for i in range(n)]
    pre: list[dict[int, int]] = []
    post: list[dict[int, int]] = []
    for i in range(n):
        pre.append({f: model.add_col(f"v{f}_{i}") for f in sorted(chained)})
        post.append({f: model.add_col(f"v{f}'_{i}") for f in sorted(chained)})

    for (i, j) in sorted(pop.edges):
        model.add_row({stepcols[j]: 1, stepcols[i]: -1}, ">=", epsf,
                      name=f"order{i}_{j}")
    # pairs the partial order leaves free still need epsilon separation in
    # some direction: one sequencing binary per unordered pair
    reach = {i: {i} for i in range(n)}
    changed = True
    while changed:
        changed = False
        for (a, b) in pop.edges:
            if not reach[b] <= reach[a]:
                reach[a] |= reach[b]
                changed = True
    bigm = horizon + 1.0
    for i in range(n):
        for j in range(i + 1, n):
            if j in reach[i] or i in reach[j]:
                continue
            o = model.add_col(f"seq_{i}_{j}", binary=True)
            model.add_row({stepcols[j]: 1, stepcols[i]: -1, o: bigm},
                          ">=", epsf, name=f"sep{i}_{j}a")
            model.add_row({stepcols[i]: 1, stepcols[j]: -1, o: -bigm},
                          ">=", epsf - bigm, name=f"sep{i}_{j}b")
    for i, st in enumerate(state.plan):
        if st.snap.kind == "til":
            model.add_row({stepcols[i]: 1}, "=",
                          float(task.tils[st.snap.til_index].time), name=f"til{i}")
    if state.til_cursor < len(task.tils):
        bound = float(task.tils[state.til_cursor].time) - epsf
        for i, st in enumerate(state.plan):
            if st.snap.kind != "til":
                model.columns[stepcols[i]].ub = min(
                    model.columns[stepcols[i]].ub, bound)

    def endpoint_cols(i: int):
        st = state.plan[i]
        if st.snap.kind == "start":
            j = state.end_step_of(i)
            return stepcols[i], stepcols[j]
        if st.snap.kind == "end":
            return stepcols[st.pair], stepcols[i]
        return None, None

    def cond_row(conds, cols, valuation, tag):
        for c in conds:
            coeffs, const = scheduler._expr_split(chained, valuation, c.expr)
            if not coeffs:
                continue
            row = {cols[f]: float(w) for f, w in coeffs.items()}
            rhs = float(c.rhs - const)
            if c.relation in (Relation.GE, Relation.GT):
                model.add_row(row, ">=", rhs + (epsf if c.relation.strict else 0.0),
                              name=tag)
            elif c.relation in (Relation.LE, Relation.LT):
                model.add_row(row, "<=", rhs - (epsf if c.relation.strict else 0.0),
                              name=tag)
            else:
                model.add_row(row, "=", rhs, name=tag)

    # chained fluents replay exactly as in the consistency LP
    if chained and n:
        for f in sorted(chained):
            model.add_row({pre[0][f]: 1}, "=", float(task.init_fluents[f]),
                          name=f"init_v{f}")
    for i, st in enumerate(state.plan):
        snap = st.snap
        cs, ce = endpoint_cols(i)
        effs_by_f: dict[int, list] = {}
        for e in snap.num_effects:
            if e.fluent in chained:
                effs_by_f.setdefault(e.fluent, []).append(e)
        for f in sorted(chained):
            effs = effs_by_f.get(f, [])
            row = {post[i][f]: 1.0, pre[i][f]: -1.0}
            const_total = Q(0)
            for e in effs:
                if e.op == "=":
                    raise UnsupportedConstructError(
                        "assignment on a chained fluent in post-hoc", snap.name)
                d = e.delta_expr()
                coeffs, const = scheduler._expr_split(chained, vals[i], d)
                for g, w in coeffs.items():
                    row[pre[i][g]] = row.get(pre[i][g], 0.0) - float(w)
                if d.duration_coeff != 0:
                    row[ce] = row.get(ce, 0.0) - float(d.duration_coeff)
                    row[cs] = row.get(cs, 0.0) + float(d.duration_coeff)
                const_total += const
            model.add_row(row, "=", float(const_total), name=f"eff{i}_v{f}")
        if i + 1 < n:
            d = deltas[i + 1]
            for f in sorted(chained):
                row = {pre[i + 1][f]: 1.0, post[i][f]: -1.0}
                k = d.get(f, Q(0))
                if k != 0:
                    row[stepcols[i + 1]] = -float(k)
                    row[stepcols[i]] = row.get(stepcols[i], 0.0) + float(k)
                model.add_row(row, "=", 0.0, name=f"flow{i + 1}_v{f}")
        cond_row(snap.pre_num, pre[i], vals[i], f"pre{i}")

    for i, st in enumerate(state.plan):
        if st.snap.kind != "start":
            continue
        action = task.actions[st.snap.origin]
        j = state.end_step_of(i)
        if action.inv_num and chained:
            for k in range(i, j):
                cond_row(action.inv_num, post[k], vals[k + 1], f"inv{i}@{k}'")
            for k in range(i + 1, j + 1):
                cond_row(action.inv_num, pre[k], vals[k], f"inv{i}@{k}")
        cs, ce = endpoint_cols(i)
        for e in action.dur_eqs:
            _dur_row(model, chained, vals[i], pre[i], cs, ce, e, "=", False, epsf)
        for e, s in action.dur_lbs:
            _dur_row(model, chained, vals[i], pre[i], cs, ce, e, ">=", s, epsf)
        for e, s in action.dur_ubs:
            _dur_row(model, chained, vals[i], pre[i], cs, ce, e, "<=", s, epsf)

    milp = _Milp(model, stepcols, horizon, pre=pre, post=post)

    # metric-tracking fluents: order-independent aggregate final values
    mt = task.metric_tracking
    final_vals = vals[n] if vals else dict(task.init_fluents)
    for f in sorted(mt):
        col = model.add_col(f"final_v{f}")
        row = {col: 1.0}
        const = Q(task.init_fluents.get(f, Q(0)))
        for i, st in enumerate(state.plan):
            cs, ce = endpoint_cols(i)
            for e in st.snap.num_effects:
                if e.fluent != f:
                    continue
                if e.op == "=":
                    raise UnsupportedConstructError(
                        "assignment on a metric-tracking fluent", st.snap.name)
                d = e.delta_expr()
                coeffs, c0 = scheduler._expr_split(chained, vals[i], d)
                for g, w in coeffs.items():
                    row[pre[i][g]] = row.get(pre[i][g], 0.0) - float(w)
                if d.duration_coeff != 0:
                    row[ce] = row.get(ce, 0.0) - float(d.duration_coeff)
                    row[cs] = row.get(cs, 0.0) + float(d.duration_coeff)
                const += c0
            if st.snap.kind == "start":
                action = task.actions[st.snap.origin]
                for g, k in action.cont:
                    if g != f:
                        continue
                    row[ce] = row.get(ce, 0.0) - float(k)
                    row[cs] = row.get(cs, 0.0) + float(k)
        ridx = model.add_row(row, "=", float(const), name=f"final_v{f}")
        milp.mt_final[f] = col
        milp.mt_rows[f] = ridx

    # conditional effects -> switch encodings feeding the final-value rows
    for i, st in enumerate(state.plan):
        if st.snap.kind != "start":
            continue
        action = task.actions[st.snap.origin]
        for ce_idx, ce in enumerate(action.cond_effects):
            _encode_cond_effect(milp, pop, i, ce, ce_idx, eps, vals)

    return milp


def _dur_row(model, chained, valuation, precols, cs, ce, expr, rel, strict, epsf):
    coeffs, const = scheduler._expr_split(chained, valuation, expr)
    row = {ce: 1.0}
    row[cs] = row.get(cs, 0.0) - 1.0
    for g, w in coeffs.items():
        row[precols[g]] = row.get(precols[g], 0.0) - float(w)
    rhs = float(const)
    if strict:
        rhs = rhs + epsf if rel == ">=" else rhs - epsf
    model.add_row(row, rel, rhs, name="dur")


def _til_windows(task: GroundedTask, p: int) -> list[tuple[float, float]]:
    """Truth intervals of fact p under the timed-literal timeline."""
    windows = []
    open_at = 0.0 if p in task.init_props else None
    for til in task.tils:
        if p in til.dels and open_at is not None:
            windows.append((open_at, float(til.time)))
            open_at = None
        if p in til.adds and open_at is None:
            open_at = float(til.time)
    if open_at is not None:
        windows.append((open_at, INF))
    return windows


def _window_switch(milp: _Milp, stepcol: int, lo: float, hi: float,
                   epsf: float, tag: str) -> int:
    """switch <=> (step > lo) and (step < hi), big-M over the horizon."""
    m = milp.model
    N = milp.horizon + 1.0
    sw = m.add_col(f"sw_{tag}", binary=True)
    m.add_row({stepcol: 1, sw: -(lo + epsf)}, ">=", 0.0, name=f"{tag}_fwd_lo")
    if hi < INF:
        m.add_row({stepcol: 1, sw: N - (hi - epsf)}, "<=", N, name=f"{tag}_fwd_hi")
    ga = m.add_col(f"ga_{tag}", binary=True)
    lb = m.add_col(f"lb_{tag}", binary=True)
    m.add_row({stepcol: -1, ga: N}, ">=", -lo, name=f"{tag}_rev_lo")
    if hi < INF:
        m.add_row({stepcol: 1, lb: N}, ">=", hi, name=f"{tag}_rev_hi")
    else:
        m.add_row({lb: 1}, "=", 1.0, name=f"{tag}_rev_hi")
    m.add_row({sw: 1, ga: -1, lb: -1}, ">=", -1.0, name=f"{tag}_rev")
    milp.n_switches += 1
    return sw


def _and_switch(milp: _Milp, parts: list[int], tag: str) -> int:
    m = milp.model
    if len(parts) == 1:
        return parts[0]
    sw = m.add_col(f"and_{tag}", binary=True)
    j = len(parts)
    row = {sw: -float(j)}
    for p in parts:
        row[p] = row.get(p, 0.0) + 1.0
    m.add_row(row, ">=", 0.0, name=f"{tag}_andf")
    row2 = {sw: 1.0}
    for p in parts:
        row2[p] = row2.get(p, 0.0) - 1.0
    m.add_row(row2, ">=", float(1 - j), name=f"{tag}_andr")
    milp.n_switches += 1
    return sw


def _or_switch(milp: _Milp, parts: list[int], tag: str) -> int:
    m = milp.model
    if len(parts) == 1:
        return parts[0]
    sw = m.add_col(f"or_{tag}", binary=True)
    for p in parts:
        m.add_row({sw: 1, p: -1}, ">=", 0.0, name=f"{tag}_or")
    row = {sw: 1.0}
    for p in parts:
        row[p] = row.get(p, 0.0) - 1.0
    m.add_row(row, "<=", 0.0, name=f"{tag}_orub")
    milp.n_switches += 1
    return sw


def _encode_cond_effect(milp: _Milp, pop: PartialOrderPlan, start_idx: int,
                        ce, ce_idx: int, eps: Q, vals):
    state = pop.state
    task = state.task
    m = milp.model
    epsf = float(eps)
    end_idx = state.end_step_of(start_idx)
    tag = f"s{start_idx}c{ce_idx}"
    parts: list[int] = []
    for cnum, (when, cond) in enumerate(ce.conditions):
        ctag = f"{tag}_{cnum}"
        if isinstance(cond, int):
            touched = any(cond in (a.add_start | a.add_end | a.del_start
                                   | a.del_end) for a in task.actions)
            if touched:
                raise UnsupportedConstructError(
                    "conditional effect on an action-controlled fact",
                    state.plan[start_idx].snap.name)
            windows = _til_windows(task, cond)
            points = {"start": [start_idx], "end": [end_idx],
                      "inv": [start_idx, end_idx]}[when]
            win_parts = []
            for w, (lo, hi) in enumerate(windows):
                pt_parts = [
                    _window_switch(milp, milp.stepcols[pt], lo, hi, epsf,
                                   f"{ctag}w{w}p{pt}")
                    for pt in points]
                win_parts.append(_and_switch(milp, pt_parts, f"{ctag}w{w}"))
            if not win_parts:
                zero = m.add_col(f"never_{ctag}", binary=True)
                m.add_row({zero: 1}, "=", 0.0, name=f"{ctag}_never")
                win_parts = [zero]
            parts.append(_or_switch(milp, win_parts, ctag))
        elif cond.expr.duration_coeff != 0:
            parts.append(_duration_switch(milp, cond, start_idx, end_idx,
                                          epsf, ctag))
        else:
            parts.append(_numeric_switch(milp, pop, cond, when, start_idx,
                                         end_idx, vals, epsf, ctag))
    sw = _and_switch(milp, parts, tag)

    # wire the gated contribution into the final-value row of the fluent
    eff = ce.effect
    sign = 1.0 if eff.op == "+=" else -1.0
    frow = milp.model.rows[milp.mt_rows[eff.fluent]]
    coeffs, const = scheduler._expr_split(pop.chained, vals[len(state.plan)],
                                          eff.expr)
    if coeffs:
        raise UnsupportedConstructError(
            "conditional effect reading a time-dependent fluent",
            state.plan[start_idx].snap.name)
    if const != 0:
        frow.coeffs[sw] = frow.coeffs.get(sw, 0.0) - sign * float(const)
    k = eff.expr.duration_coeff
    if k != 0:
        # duration-scaled part: sign*k*sw*(step_end - step_start); the
        # product goes through the objective shim, weighted by the metric
        milp.shim_terms.append((sw, milp.stepcols[end_idx],
                                sign * float(k), eff.fluent))
        milp.shim_terms.append((sw, milp.stepcols[start_idx],
                                -sign * float(k), eff.fluent))


def _duration_switch(milp: _Milp, cond: NumericCondition, i: int, j: int,
                     epsf: float, tag: str) -> int:
    """switch <=> (duration rel bound), duration = step_j - step_i."""
    m = milp.model
    N = milp.horizon + 1.0
    k = float(cond.expr.duration_coeff)
    bound = float(cond.rhs) / k
    rel = cond.relation if k > 0 else cond.relation.flip()
    if rel is Relation.EQ:
        raise UnsupportedConstructError("equality duration condition", tag)
    sw = m.add_col(f"dsw_{tag}", binary=True)
    dur = {milp.stepcols[j]: 1.0, milp.stepcols[i]: -1.0}
    if rel in (Relation.LT, Relation.LE):
        margin = epsf if rel.strict else 0.0
        row = dict(dur)                       # sw=1 -> dur <= bound - margin
        row[sw] = N
        m.add_row(row, "<=", N + bound - margin, name=f"{tag}_fwd")
        row = dict(dur)                       # sw=0 -> not(dur rel bound)
        row[sw] = N
        m.add_row(row, ">=", bound + (0.0 if rel.strict else epsf),
                  name=f"{tag}_rev")
    else:
        margin = epsf if rel.strict else 0.0
        row = dict(dur)                       # sw=1 -> dur >= bound + margin
        row[sw] = -N
        m.add_row(row, ">=", bound + margin - N, name=f"{tag}_fwd")
        row = dict(dur)                       # sw=0 -> dur <= bound (-eps)
        row[sw] = -N
        m.add_row(row, "<=", bound - (0.0 if rel.strict else epsf),
                  name=f"{tag}_rev")
    milp.n_switches += 1
    return sw


def _numeric_switch(milp: _Milp, pop: PartialOrderPlan, cond, when,
                    start_idx, end_idx, vals, epsf, tag) -> int:
    """Numeric condition over fluent values: constant fold when the fluents
    are order-stable, big-M sample rows over the chained columns otherwise."""
    m = milp.model
    chained = pop.chained
    if not (set(cond.fluents) & chained):
        at = {"start": start_idx, "end": end_idx, "inv": None}[when]
        if at is not None:
            holds = cond.satisfied_exact(vals[at])
        else:
            holds = all(cond.satisfied_exact(vals[k])
                        for k in range(start_idx + 1, end_idx + 1))
        sw = m.add_col(f"nsw_{tag}", binary=True)
        m.add_row({sw: 1}, "=", 1.0 if holds else 0.0, name=f"{tag}_const")
        milp.n_switches += 1
        return sw
    ge = cond.ge_forms()
    if len(ge) != 1:
        raise UnsupportedConstructError("equality conditional-effect condition", tag)
    expr, rhs, strict = ge[0]
    N = milp.horizon * 10 + 1000.0
    # sample points: [v'_k, v_{k+1}, ...] between start and end for over-all
    if when == "start":
        points = [(milp.pre[start_idx], start_idx)]
    elif when == "end":
        points = [(milp.pre[end_idx], end_idx)]
    else:
        points = []
        for k in range(start_idx, end_idx):
            points.append((milp.post[k], k + 1))
            points.append((milp.pre[k + 1], k + 1))
    sw = m.add_col(f"nsw_{tag}", binary=True)
    sub = []
    xi = epsf
    base_rhs = float(rhs) + (epsf if strict else 0.0)
    for x, (cols, vidx) in enumerate(points):
        coeffs, const = scheduler._expr_split(chained, vals[vidx], expr)
        rhsf = base_rhs - float(const)
        row = {cols[g]: float(w) for g, w in coeffs.items()}
        row[sw] = -(N + rhsf)                 # sw=1 -> w.e[x] >= rhs
        m.add_row(row, ">=", -N, name=f"{tag}_lo{x}")
        swx = m.add_col(f"nswp_{tag}_{x}", binary=True)
        row2 = {cols[g]: float(w) for g, w in coeffs.items()}
        row2[swx] = -N                        # w.e[x] > rhs - xi -> swx = 1
        m.add_row(row2, "<=", rhsf - xi, name=f"{tag}_hi{x}")
        sub.append(swx)
    srow = {sw: float(len(sub))}              # all swx -> sw
    for swx in sub:
        srow[swx] = srow.get(swx, 0.0) - 1.0
    m.add_row(srow, ">=", float(1 - len(sub)), name=f"{tag}_all")
    milp.n_switches += 1
    return sw


def optimize_plan(state: SearchState, schedule: list[float], eps: Q,
                  node_limit: int = 100_000) -> PosthocResult:
    """Reschedule the finished plan against the task metric; the original
    plan is returned unchanged whenever the MILP cannot do better."""
    from .search import timed_plan
    task = state.task
    original = timed_plan(state, schedule)
    base_report = validator.validate(task, original, float(eps))
    original_metric = base_report.metric
    sense = 1.0 if task.metric.sense == "minimize" else -1.0

    pop = lift_partial_order(state, eps)
    milp = build_posthoc_milp(pop, eps)

    objective: dict[int, float] = {}
    tt = float(task.metric.total_time_coeff)
    if tt != 0.0:
        tcol = milp.model.add_col("total_time", lb=0.0, ub=milp.horizon + 1)
        for c in milp.stepcols:
            milp.model.add_row({tcol: 1, c: -1}, ">=", 0.0, name="makespan")
        objective[tcol] = tt
    for f, w in task.metric.weights.items():
        objective[milp.mt_final[f]] = objective.get(milp.mt_final[f], 0.0) + float(w)

    model = milp.model
    model.set_objective("min" if sense > 0 else "max", objective)
    if milp.shim_terms:
        weighted = []
        for (b, x, k, fluent) in milp.shim_terms:
            w = float(task.metric.weights.get(fluent, 0.0))
            if w * k != 0.0:
                weighted.append((b, x, w * k))
        model, _z = lpmod.quadratic_objective_shim(model, weighted)
    sol = lpmod.mip_solve(model, node_limit=node_limit)
    if sol.status != "optimal":
        return PosthocResult(original, original_metric, False, original_metric,
                             status="fallback")
    times = [sol[c] for c in milp.stepcols]
    new_plan = timed_plan(state, times)
    report = validator.validate(task, new_plan, float(eps))
    better = report.ok and sense * report.metric <= sense * original_metric + 1e-6
    if not better:
        return PosthocResult(original, original_metric, False, original_metric,
                             status="fallback")
    improved = sense * report.metric < sense * original_metric - 1e-6
    status = "node-limit" if sol.node_limit_hit else "ok"
    return PosthocResult(new_plan, report.metric, improved, original_metric,
                         status=status)
