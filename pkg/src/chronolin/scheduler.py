"""Temporal-numeric consistency of plan prefixes.

Each prefix compiles to an LP: one time column per step (plus one per
pending action end), pre/post value columns per time-dependent fluent per
step, flow rows tying consecutive values through the active gradient, and
rows for effects, preconditions, invariants, durations and timed-literal
bounds.  Prefixes with no time-dependent fluent skip all of that and go to
the simple temporal network instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import stn as stnmod
from .lnf import LinearExpr, NumericCondition, Q, Relation
from .lp import INF, LinearProgramModel, lp_solve
from .state import Event, PlanStep, SearchState
from .task import GroundedTask, NumericEffect

LB_MARGIN = 1e-9      # widen cached float lower bounds to absorb solver noise


@dataclass
class ScheduleModel:
    model: LinearProgramModel
    stepcols: list[int]
    estepcols: dict[int, int]               # index into state.events -> column
    pre: list[dict[int, int]]               # per step: fluent -> v_i column
    post: list[dict[int, int]]              # per step: fluent -> v'_i column
    nowcol: int | None = None
    vnow: dict[int, int] = field(default_factory=dict)


@dataclass
class BoundsResult:
    vmin: dict[int, float]
    vmax: dict[int, float]
    min_makespan: float
    t_ref: dict[int, float] = field(default_factory=dict)


class Infeasible(Exception):
    pass


def _to_f(x) -> float:
    return float(x)


def stp_or_lp(state: SearchState) -> str:
    """The STN suffices iff no fluent ever became time-dependent."""
    return "stn" if not state.unstable else "lp"


def stable_valuations(state: SearchState) -> list[dict[int, Q]]:
    """Exact values of prefix-stable fluents before each step (index i) and
    after the last one (index n)."""
    task = state.task
    vals = [dict(task.init_fluents)]
    cur = dict(task.init_fluents)
    for i, st in enumerate(state.plan):
        nxt = dict(cur)
        for e in st.snap.num_effects:
            if e.fluent in state.unstable:
                continue
            dur = _fixed_duration_at(state, i)
            if e.op == "=":
                nxt[e.fluent] = e.expr.evaluate(cur, dur)
            else:
                nxt[e.fluent] = nxt[e.fluent] + e.delta_expr().evaluate(cur, dur)
        cur = nxt
        vals.append(cur)
    return vals


def _fixed_duration_at(state: SearchState, index: int) -> Q | None:
    """Exact duration of the action owning step ``index`` when it is fixed."""
    st = state.plan[index]
    if st.snap.kind == "til":
        return None
    if st.snap.kind == "end":
        lo, hi = st.dmin, st.dmax
    else:
        e = state.event_for_step(index)
        if e is not None:
            lo, hi = e.dmin, e.dmax
        else:
            j = state.end_step_of(index)
            lo, hi = state.plan[j].dmin, state.plan[j].dmax
    if isinstance(lo, Fraction) and lo == hi:
        return lo
    return None


def _expr_split(unstable: frozenset, valuation: dict[int, Q], expr: LinearExpr):
    """LNF expression -> (coeffs on unstable fluents, exact constant)."""
    coeffs: dict[int, Q] = {}
    const = expr.constant
    for f, w in expr.weights:
        if f in unstable:
            coeffs[f] = coeffs.get(f, Q(0)) + w
        else:
            const += w * valuation[f]
    return coeffs, const


def _delta_profiles(state: SearchState) -> list[dict[int, Q]]:
    """delta[i] = gradient active between step i-1 and step i (delta[0] = 0)."""
    task = state.task
    out: list[dict[int, Q]] = [{}]
    cur: dict[int, Q] = {}
    for st in state.plan:
        if st.snap.kind == "start":
            for f, k in task.actions[st.snap.origin].cont:
                cur[f] = cur.get(f, Q(0)) + k
        elif st.snap.kind == "end":
            for f, k in task.actions[st.snap.origin].cont:
                cur[f] = cur.get(f, Q(0)) - k
        out.append({f: k for f, k in cur.items() if k != 0})
    return out


# --------------------------------------------------------------------- LP side

def build_lp(state: SearchState, eps: Q, *, now: str | None = None,
             now_fluent: int | None = None, goal_rows: bool = False,
             til_bounds: bool = True) -> ScheduleModel:
    """Compile the prefix into an LP.  ``now`` is None, 'basic' (one shared
    now point) or 'refined' (a reference point for ``now_fluent`` alone)."""
    task = state.task
    epsf = _to_f(eps)
    n = len(state.plan)
    model = LinearProgramModel()
    deltas = _delta_profiles(state)
    vals = stable_valuations(state)

    next_til_time = (task.tils[state.til_cursor].time
                     if state.til_cursor < len(task.tils) else None)

    stepcols = []
    for i in range(n):
        lb = state.step_lbs[i] if i < len(state.step_lbs) else 0.0
        ub = INF
        if til_bounds and next_til_time is not None and \
                state.plan[i].snap.kind != "til":
            ub = _to_f(next_til_time) - epsf
        stepcols.append(model.add_col(f"step{i}", lb=max(lb - LB_MARGIN, 0.0), ub=ub))
    estepcols = {}
    for idx, e in enumerate(state.events):
        estepcols[idx] = model.add_col(f"estep{e.step}", lb=0.0)

    fl = sorted(state.unstable)
    pre: list[dict[int, int]] = []
    post: list[dict[int, int]] = []
    for i in range(n):
        pre.append({f: model.add_col(f"v{f}_{i}") for f in fl})
        post.append({f: model.add_col(f"v{f}'_{i}") for f in fl})

    # ordering and TIL pins
    for i in range(1, n):
        model.add_row({stepcols[i]: 1, stepcols[i - 1]: -1}, ">=", epsf,
                      name=f"seq{i}")
    for i, st in enumerate(state.plan):
        if st.snap.kind == "til":
            model.add_row({stepcols[i]: 1}, "=",
                          _to_f(task.tils[st.snap.til_index].time), name=f"til{i}")
    for idx in estepcols:
        if n:
            model.add_row({estepcols[idx]: 1, stepcols[n - 1]: -1}, ">=", epsf,
                          name=f"efut{idx}")

    if til_bounds:
        _deadline_bounds(state, model, stepcols, estepcols, epsf)

    def endpoint_cols(i: int):
        st = state.plan[i]
        if st.snap.kind == "start":
            j = state.end_step_of(i)
            if j is not None:
                return stepcols[i], stepcols[j]
            for idx, e in enumerate(state.events):
                if e.step == i:
                    return stepcols[i], estepcols[idx]
            raise AssertionError("open start with no event entry")
        if st.snap.kind == "end":
            return stepcols[st.pair], stepcols[i]
        return None, None

    def cond_row(conds, cols: dict[int, int], valuation, tag: str):
        for c in conds:
            coeffs, const = _expr_split(state.unstable, valuation, c.expr)
            if not coeffs:
                continue  # stable-only: enforced exactly at application time
            row = {cols[f]: _to_f(w) for f, w in coeffs.items()}
            rhs = _to_f(c.rhs - const)
            if c.relation in (Relation.GE, Relation.GT):
                model.add_row(row, ">=", rhs + (epsf if c.relation.strict else 0.0),
                              name=tag)
            elif c.relation in (Relation.LE, Relation.LT):
                model.add_row(row, "<=", rhs - (epsf if c.relation.strict else 0.0),
                              name=tag)
            else:
                model.add_row(row, "=", rhs, name=tag)

    # initial values
    if n:
        for f in fl:
            model.add_row({pre[0][f]: 1}, "=", _to_f(task.init_fluents[f]),
                          name=f"init_v{f}")

    # effects, flow, preconditions
    for i, st in enumerate(state.plan):
        snap = st.snap
        cs, ce = endpoint_cols(i)
        effects: dict[int, list[NumericEffect]] = {}
        for e in snap.num_effects:
            effects.setdefault(e.fluent, []).append(e)
        for f in fl:
            effs = effects.get(f, [])
            assigns = [e for e in effs if e.op == "="]
            if assigns:
                e = assigns[-1]
                coeffs, const = _expr_split(state.unstable, vals[i], e.expr)
                row = {post[i][f]: 1.0}
                for g, w in coeffs.items():
                    row[pre[i][g]] = row.get(pre[i][g], 0.0) - _to_f(w)
                k = e.expr.duration_coeff
                if k != 0:
                    row[ce] = row.get(ce, 0.0) - _to_f(k)
                    row[cs] = row.get(cs, 0.0) + _to_f(k)
                model.add_row(row, "=", _to_f(const), name=f"eff{i}_v{f}")
                continue
            row = {post[i][f]: 1.0, pre[i][f]: -1.0}
            const_total = Q(0)
            for e in effs:
                d = e.delta_expr()
                coeffs, const = _expr_split(state.unstable, vals[i], d)
                for g, w in coeffs.items():
                    row[pre[i][g]] = row.get(pre[i][g], 0.0) - _to_f(w)
                k = d.duration_coeff
                if k != 0:
                    row[ce] = row.get(ce, 0.0) - _to_f(k)
                    row[cs] = row.get(cs, 0.0) + _to_f(k)
                const_total += const
            model.add_row(row, "=", _to_f(const_total), name=f"eff{i}_v{f}")
        if i + 1 < n:
            d = deltas[i + 1]
            for f in fl:
                row = {pre[i + 1][f]: 1.0, post[i][f]: -1.0}
                k = d.get(f, Q(0))
                if k != 0:
                    row[stepcols[i + 1]] = -_to_f(k)
                    row[stepcols[i]] = row.get(stepcols[i], 0.0) + _to_f(k)
                model.add_row(row, "=", 0.0, name=f"flow{i + 1}_v{f}")
        cond_row(snap.pre_num, pre[i], vals[i], f"pre{i}")

    # invariants over executing intervals: v'_i .. v'_{j-1} and v_{i+1} .. v_j
    for i, st in enumerate(state.plan):
        if st.snap.kind != "start":
            continue
        action = task.actions[st.snap.origin]
        if not action.inv_num:
            continue
        j = state.end_step_of(i)
        post_last = (j - 1) if j is not None else (n - 1)
        for k in range(i, post_last + 1):
            cond_row(action.inv_num, post[k], vals[k + 1], f"inv{i}@{k}'")
        pre_last = j if j is not None else (n - 1)
        for k in range(i + 1, pre_last + 1):
            cond_row(action.inv_num, pre[k], vals[k], f"inv{i}@{k}")

    # duration constraints of every started action, over v_i at its start
    for i, st in enumerate(state.plan):
        if st.snap.kind != "start":
            continue
        action = task.actions[st.snap.origin]
        cs, ce = endpoint_cols(i)

        def dur_row(expr: LinearExpr, rel: str, strict: bool):
            coeffs, const = _expr_split(state.unstable, vals[i], expr)
            row = {ce: 1.0}
            row[cs] = row.get(cs, 0.0) - 1.0
            for g, w in coeffs.items():
                row[pre[i][g]] = row.get(pre[i][g], 0.0) - _to_f(w)
            rhs = _to_f(const)
            if strict:
                rhs = rhs + epsf if rel == ">=" else rhs - epsf
            model.add_row(row, rel, rhs, name=f"dur{i}")

        for e in action.dur_eqs:
            dur_row(e, "=", False)
        for e, s in action.dur_lbs:
            dur_row(e, ">=", s)
        for e, s in action.dur_ubs:
            dur_row(e, "<=", s)

    sched = ScheduleModel(model, stepcols, estepcols, pre, post)

    if now is not None and n:
        last = n - 1
        nowcol = model.add_col("step_now", lb=0.0)
        sched.nowcol = nowcol
        model.add_row({nowcol: 1, stepcols[last]: -1}, ">=", epsf, name="now_seq")
        dnow = deltas[n]
        fluents = fl if now == "basic" else [now_fluent]
        if now == "basic":
            for idx in estepcols:
                model.add_row({estepcols[idx]: 1, nowcol: -1}, ">=", 0.0,
                              name=f"now_before_end{idx}")
        for f in fluents:
            vn = model.add_col(f"v{f}_now")
            sched.vnow[f] = vn
            row = {vn: 1.0, post[last][f]: -1.0}
            k = dnow.get(f, Q(0))
            if k != 0:
                row[nowcol] = -_to_f(k)
                row[stepcols[last]] = row.get(stepcols[last], 0.0) + _to_f(k)
            model.add_row(row, "=", 0.0, name=f"now_flow_v{f}")
        for idx, e in enumerate(state.events):
            action = task.actions[e.op]
            for c in action.inv_num:
                coeffs, const = _expr_split(state.unstable, vals[n], c.expr)
                if not coeffs or any(g not in sched.vnow for g in coeffs):
                    continue
                row = {sched.vnow[g]: _to_f(w) for g, w in coeffs.items()}
                rhs = _to_f(c.rhs - const)
                if c.relation in (Relation.GE, Relation.GT):
                    model.add_row(row, ">=",
                                  rhs + (epsf if c.relation.strict else 0.0),
                                  name=f"now_inv{idx}")
                elif c.relation in (Relation.LE, Relation.LT):
                    model.add_row(row, "<=",
                                  rhs - (epsf if c.relation.strict else 0.0),
                                  name=f"now_inv{idx}")
                else:
                    model.add_row(row, "=", rhs, name=f"now_inv{idx}")

    if goal_rows and n:
        cond_row(task.goal_num, post[n - 1], vals[n], "goal")

    return sched


def _deadline_bounds(state: SearchState, model, stepcols, estepcols, epsf):
    """Upper bounds implied by timed literals that act as deadlines."""
    task = state.task
    for p, td in _deadline_table(task).items():
        tdf = _to_f(td)
        for i, st in enumerate(state.plan):
            if p in st.snap.pre:
                col = model.columns[stepcols[i]]
                col.ub = min(col.ub, tdf - epsf)
        for idx, e in enumerate(state.events):
            action = task.actions[e.op]
            col = model.columns[estepcols[idx]]
            if p in action.pre_end:
                col.ub = min(col.ub, tdf - epsf)
            if p in action.inv:
                col.ub = min(col.ub, tdf)


_DEADLINE_CACHE: dict[int, dict] = {}


def _deadline_table(task: GroundedTask) -> dict[int, Q]:
    """p -> time of the TIL deleting p, for p true initially, added by no
    action and reinstated by no later TIL."""
    key = id(task)
    if key in _DEADLINE_CACHE:
        return _DEADLINE_CACHE[key]
    added: set[int] = set()
    for a in task.actions:
        added |= a.add_start | a.add_end
    out: dict[int, Q] = {}
    for til in task.tils:
        for p in til.dels:
            if p not in task.init_props or p in added or p in out:
                continue
            if any(p in t2.adds for t2 in task.tils):
                continue
            out[p] = til.time
    _DEADLINE_CACHE[key] = out
    return out


def check_consistency(state: SearchState, eps: Q, *, goal_rows: bool = False):
    """Feasible -> (min_makespan, step times, estep values); else None."""
    if not state.plan:
        if goal_rows and not all(
                c.satisfied_exact(state.values) for c in state.task.goal_num):
            return None
        return 0.0, [], {}
    if stp_or_lp(state) == "stn" and not (goal_rows and state.task.goal_num):
        return _stn_consistency(state, eps)
    sched = build_lp(state, eps, goal_rows=goal_rows)
    last = sched.stepcols[-1]
    sched.model.set_objective("min", {last: 1.0})
    sol = lp_solve(sched.model)
    if sol.status != "optimal":
        return None
    times = [sol[c] for c in sched.stepcols]
    esteps = {idx: sol[c] for idx, c in sched.estepcols.items()}
    return sol.objective, times, esteps


# -------------------------------------------------------------------- STN side

def build_stn(state: SearchState, eps: Q) -> stnmod.Stn:
    task = state.task
    net = stnmod.Stn()
    n = len(state.plan)
    for i in range(n):
        net.add_node(("t", i))
    for i, st in enumerate(state.plan):
        if i > 0:
            net.add_constraint(("t", i - 1), ("t", i), eps)
        if st.snap.kind == "til":
            ts = task.tils[st.snap.til_index].time
            net.add_constraint(stnmod.ALPHA, ("t", i), ts, ts)
        if st.snap.kind == "end":
            net.add_constraint(("t", st.pair), ("t", i), st.dmin,
                               st.dmax if st.dmax != math.inf else math.inf)
    for idx, e in enumerate(state.events):
        net.add_node(("f", idx))
        net.add_constraint(("t", e.step), ("f", idx), e.dmin,
                           e.dmax if e.dmax != math.inf else math.inf)
        if n:
            net.add_constraint(("t", n - 1), ("f", idx), eps)
    if state.til_cursor < len(task.tils):
        ts = task.tils[state.til_cursor].time
        for i, st in enumerate(state.plan):
            if st.snap.kind != "til":
                net.add_constraint(stnmod.ALPHA, ("t", i), Q(0), ts - eps)
    for p, td in _deadline_table(task).items():
        for i, st in enumerate(state.plan):
            if p in st.snap.pre:
                net.add_constraint(stnmod.ALPHA, ("t", i), Q(0), td - eps)
        for idx, e in enumerate(state.events):
            action = task.actions[e.op]
            if p in action.pre_end:
                net.add_constraint(stnmod.ALPHA, ("f", idx), Q(0), td - eps)
            if p in action.inv:
                net.add_constraint(stnmod.ALPHA, ("f", idx), Q(0), td)
    return net


def _stn_consistency(state: SearchState, eps: Q):
    net = build_stn(state, eps)
    schedule = net.earliest_schedule()
    if schedule is None:
        return None
    times = [schedule[("t", i)] for i in range(len(state.plan))]
    esteps = {idx: schedule[("f", idx)] for idx in range(len(state.events))}
    makespan = times[-1] if times else Q(0)
    return makespan, times, esteps


# ------------------------------------------------------------------ now bounds

def bounds_now_basic(state: SearchState, eps: Q) -> BoundsResult:
    """Reachable-value envelope per fluent at some legal future instant."""
    vmin = {f: float(v) for f, v in state.values.items() if f not in state.unstable}
    vmax = dict(vmin)
    if not state.unstable or not state.plan:
        for f in state.unstable:
            vmin[f] = vmax[f] = float(state.task.init_fluents[f])
        return BoundsResult(vmin, vmax, state.min_makespan)
    sched = build_lp(state, eps, now="basic")
    for f in sorted(state.unstable):
        col = sched.vnow[f]
        sched.model.set_objective("min", {col: 1.0})
        lo = lp_solve(sched.model)
        sched.model.set_objective("max", {col: 1.0})
        hi = lp_solve(sched.model)
        if lo.status == "infeasible" or hi.status == "infeasible":
            raise Infeasible("bounds LP infeasible on a consistent state")
        vmin[f] = -INF if lo.status == "unbounded" else lo.objective
        vmax[f] = INF if hi.status == "unbounded" else hi.objective
    return BoundsResult(vmin, vmax, state.min_makespan)


def now_window(state: SearchState, eps: Q, anchor_first_step: bool = True):
    """Diagnostic (min, max) of the next-happening instant.  Production code
    never optimizes this variable; with ``anchor_first_step`` the plan is
    pinned at its cached earliest start so the window is finite."""
    if not state.plan:
        return 0.0, math.inf
    sched = build_lp(state, eps, now="basic")
    if anchor_first_step:
        lb = state.step_lbs[0] if state.step_lbs else 0.0
        sched.model.add_row({sched.stepcols[0]: 1}, "=", lb, name="anchor0")
    sched.model.set_objective("min", {sched.nowcol: 1.0})
    lo = lp_solve(sched.model)
    sched.model.set_objective("max", {sched.nowcol: 1.0})
    hi = lp_solve(sched.model)
    lo_v = lo.objective if lo.status == "optimal" else math.nan
    hi_v = hi.objective if hi.status == "optimal" else math.inf
    return lo_v, hi_v


def bounds_now_refined(state: SearchState, eps: Q, fluent: int,
                       guards=None) -> tuple[float, float, float]:
    """Bounds on a fluent at the earliest instant it can legally be referred
    to; returns (vmin, vmax, t_ref)."""
    if fluent not in state.unstable or not state.plan:
        v = float(state.values[fluent]) if fluent in state.values \
            else float(state.task.init_fluents[fluent])
        return v, v, 0.0
    sched = build_lp(state, eps, now="refined", now_fluent=fluent)
    model = sched.model
    epsf = _to_f(eps)
    if guards is None:
        guards = guard_gates(state.task)
    for p in guards.get(fluent, ()):
        col = _guard_anchor_col(state, sched, p)
        if col is not None:
            model.add_row({sched.nowcol: 1, col: -1}, ">=", epsf,
                          name=f"gate_p{p}")
    model.set_objective("min", {sched.nowcol: 1.0})
    sol = lp_solve(model)
    if sol.status != "optimal":
        raise Infeasible("refined-bounds LP infeasible on a consistent state")
    t_ref = sol.objective
    model.add_row({sched.nowcol: 1}, "=", t_ref, name="fix_tnow")
    vcol = sched.vnow[fluent]
    model.set_objective("min", {vcol: 1.0})
    lo = lp_solve(model)
    model.set_objective("max", {vcol: 1.0})
    hi = lp_solve(model)
    vmin = -INF if lo.status == "unbounded" else lo.objective
    vmax = INF if hi.status == "unbounded" else hi.objective
    return vmin, vmax, t_ref


def _guard_anchor_col(state: SearchState, sched: ScheduleModel, p: int):
    """LP column for the step after which the guard fact p is available."""
    task = state.task
    if p in state.props:
        for i in range(len(state.plan) - 1, -1, -1):
            if p in state.plan[i].snap.adds:
                return sched.stepcols[i]
        return None  # true since the initial state
    for idx, e in enumerate(state.events):
        action = task.actions[e.op]
        if p in action.del_start and p in action.add_end:
            return sched.estepcols[idx]
    return None


_GUARD_CACHE: dict[int, dict] = {}


def guard_gates(task: GroundedTask) -> dict[int, tuple[int, ...]]:
    """fluent -> guard facts under the require-delete-add idiom.

    A fact p gates v when p starts true, every action that refers to v holds
    p in one of the recognised require/delete/add patterns, and nothing else
    touches p.
    """
    key = id(task)
    if key in _GUARD_CACHE:
        return _GUARD_CACHE[key]

    def refers(a, v: int) -> bool:
        for conds in (a.pre_start_num, a.inv_num, a.pre_end_num):
            if any(v in c.fluents for c in conds):
                return True
        for exprs in (a.dur_eqs, [e for e, _ in a.dur_lbs], [e for e, _ in a.dur_ubs]):
            if any(v in e.fluents for e in exprs):
                return True
        for effs in (a.num_start, a.num_end):
            if any(e.fluent == v or v in e.expr.fluents for e in effs):
                return True
        return any(f == v for f, _ in a.cont)

    def pattern_ok(a, p: int) -> bool:
        spanning = p in a.pre_start and p in a.del_start and p in a.add_end
        instant_s = p in a.pre_start and p in a.del_start and p in a.add_start
        instant_e = p in a.pre_end and p in a.del_end and p in a.add_end
        return spanning or instant_s or instant_e

    def touches(a, p: int) -> bool:
        return p in (a.pre_start | a.pre_end | a.inv | a.add_start | a.add_end
                     | a.del_start | a.del_end)

    out: dict[int, tuple[int, ...]] = {}
    for v in range(len(task.fluents)):
        referrers = [a for a in task.actions if refers(a, v)]
        if not referrers:
            continue
        gates = []
        for p in range(len(task.propositions)):
            if p not in task.init_props:
                continue
            if any(p in t.adds or p in t.dels for t in task.tils):
                continue
            if not all(pattern_ok(a, p) for a in referrers):
                continue
            others = [a for a in task.actions
                      if a not in referrers and touches(a, p)]
            if any(not pattern_ok(a, p) for a in others):
                continue
            gates.append(p)
        if gates:
            out[v] = tuple(gates)
    _GUARD_CACHE[key] = out
    return out


# ---------------------------------------------------------------- elapsed info

def elapsed_bounds(state: SearchState, eps: Q) -> list[tuple[float, float]]:
    """Per event: (min, max) time the action can have been executing at the
    next decision instant; drives remaining-time windows in the heuristics."""
    out: list[tuple[float, float]] = []
    if not state.events:
        return out
    if stp_or_lp(state) == "stn":
        net = build_stn(state, eps)
        net.add_node(("now",))
        if state.plan:
            net.add_constraint(("t", len(state.plan) - 1), ("now",), eps)
        for idx in range(len(state.events)):
            net.add_constraint(("now",), ("f", idx), Q(0))
        fw = stnmod.floyd_warshall(net)
        if fw is None:
            return [(0.0, 0.0)] * len(state.events)
        for e in state.events:
            hi = fw[(("t", e.step), ("now",))]
            lo = -fw[(("now",), ("t", e.step))]
            out.append((float(max(lo, 0)),
                        float(hi) if hi != math.inf else math.inf))
        return out
    sched = build_lp(state, eps, now="basic")
    for idx, e in enumerate(state.events):
        obj = {sched.nowcol: 1.0, sched.stepcols[e.step]: -1.0}
        sched.model.set_objective("min", obj)
        lo = lp_solve(sched.model)
        sched.model.set_objective("max", obj)
        hi = lp_solve(sched.model)
        lo_v = 0.0 if lo.status != "optimal" else max(lo.objective, 0.0)
        hi_v = math.inf if hi.status != "optimal" else hi.objective
        out.append((lo_v, hi_v))
    return out
