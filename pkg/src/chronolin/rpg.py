"""Relaxed-plan heuristics over time-stamped fact/action layers.

Two variants share one graph engine.  The basic variant folds each
continuous effect into an instantaneous start effect sized by the largest
state-independent duration; the refined variant keeps per-fluent gradient
envelopes and advances time to the earliest instant an unsatisfied numeric
precondition can be reached.  Both gate action ends on the earliest (and,
for executing actions, latest) time their end could occur.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import scheduler
from .lnf import Q, Relation
from .state import SearchState
from .task import GroundedTask

INF = math.inf


@dataclass(frozen=True)
class CondF:
    """Canonical >=-form with floats: sum w[f]*v[f] >= rhs."""
    weights: tuple[tuple[int, float], ...]
    rhs: float

    def ub(self, vmin: dict, vmax: dict) -> float:
        total = 0.0
        for f, w in self.weights:
            v = vmax[f] if w > 0 else vmin[f]
            if v == INF and w > 0 or v == -INF and w < 0:
                return INF
            total += w * v
        return total

    def sat(self, vmin: dict, vmax: dict) -> bool:
        return self.ub(vmin, vmax) >= self.rhs - 1e-9

    def growth_rate(self, dmax: dict, dmin: dict) -> float:
        rate = 0.0
        for f, w in self.weights:
            g = dmax.get(f, 0.0) if w > 0 else dmin.get(f, 0.0)
            if g == INF and w > 0 or g == -INF and w < 0:
                return INF
            rate += w * g
        return rate


@dataclass(frozen=True)
class EffF:
    fluent: int
    op: str                                   # '+=' | '-=' | '='
    weights: tuple[tuple[int, float], ...]
    const: float
    dur_k: float = 0.0
    dur_lo: float = 0.0
    dur_hi: float = 0.0

    def _base(self, hi: bool, vmin, vmax) -> float:
        total = self.const
        for f, w in self.weights:
            v = (vmax[f] if (w > 0) == hi else vmin[f])
            if abs(v) == INF:
                return math.copysign(INF, v * w)
            total += w * v
        if self.dur_k:
            dur_term = (max if hi else min)(self.dur_k * self.dur_lo,
                                            self.dur_k * self.dur_hi)
            total += dur_term
        return total

    def max_value(self, vmin, vmax) -> float:
        v = self._base(True, vmin, vmax)
        return -v if self.op == "-=" else v

    def min_value(self, vmin, vmax) -> float:
        v = self._base(False, vmin, vmax)
        return -v if self.op == "-=" else v


@dataclass
class RSnap:
    sid: int
    origin: int
    kind: str                 # 'start' | 'end' | 'til'
    name: str
    pre_props: frozenset
    conds: tuple[CondF, ...]
    adds: frozenset
    effects: tuple[EffF, ...]
    grads: tuple[tuple[int, float], ...] = ()      # g(a), refined mode
    dmin_reg: float = 0.0     # start snaps: a-priori min duration of the action
    dmax_const: float = INF
    end_sid: int = -1
    start_sid: int = -1
    one_shot: bool = False
    p_bound: float = INF
    til_index: int = -1
    injected: tuple = ()      # end snaps: (fluent, sense, base, rate, dmin) rows


@dataclass
class Layer:
    time: float
    members: set[int] = field(default_factory=set)


@dataclass
class Trpg:
    layers: list[Layer]
    fact_times: list[float]
    bounds_at: dict[float, tuple[dict, dict]]
    first_snap: dict[int, float]
    first_prop: dict[int, float]
    goal_time: float | None
    dead: bool
    required: set[int]


@dataclass
class RelaxedPlan:
    chosen: list[tuple[int, float]]           # (snap id, layer time)
    h: float
    makespan: float
    helpful: frozenset[int]


def _cond_to_f(cond, eps: Q) -> list[CondF]:
    out = []
    for expr, rhs, strict in cond.ge_forms():
        out.append(CondF(tuple((f, float(w)) for f, w in expr.weights),
                         float(rhs) + (float(eps) if strict else 0.0)))
    return out


_TABLE_CACHE: dict[tuple[int, str], list[RSnap]] = {}


def relax_tables(task: GroundedTask, mode: str, eps: Q) -> list[RSnap]:
    """Per-snap relaxed views shared by all states (mode: 'basic'|'refined')."""
    key = (id(task), mode)
    if key in _TABLE_CACHE:
        return _TABLE_CACHE[key]
    out: list[RSnap] = []
    epsf = float(eps)
    for a in task.actions:
        lo, hi = a.duration_interval_const()
        dmin_c = float(lo) if lo is not None else epsf
        dmax_c = float(hi) if hi is not None else INF
        sstart = task.start_snap[a.id]
        send = task.end_snap[a.id]
        for snap in (sstart, send):
            is_start = snap.kind == "start"
            conds = []
            for c in snap.pre_num:
                conds.extend(_cond_to_f(c, eps))
            effects = []
            grads: list[tuple[int, float]] = []
            for e in snap.num_effects:
                k = float(e.expr.duration_coeff)
                if k != 0 and mode == "refined" and not is_start:
                    # duration-dependent end effect: discrete part at dmin,
                    # the rest as a gradient
                    effects.append(EffF(e.fluent, e.op,
                                        tuple((f, float(w)) for f, w in e.expr.weights),
                                        float(e.expr.constant), k, dmin_c, dmin_c))
                    gk = k if e.op in ("+=", "=") else -k
                    grads.append((e.fluent, gk))
                else:
                    effects.append(EffF(e.fluent, e.op,
                                        tuple((f, float(w)) for f, w in e.expr.weights),
                                        float(e.expr.constant), k, dmin_c, dmax_c))
            if is_start:
                if mode == "refined":
                    grads.extend((f, float(k)) for f, k in a.cont)
                else:
                    for f, k in a.cont:
                        total = float(k) * dmax_c
                        effects.append(EffF(f, "+=", (), total))
            injected = []
            if not is_start:
                injected = _mod2_templates(a, dmin_c)
            out.append(RSnap(
                sid=snap.id, origin=a.id, kind=snap.kind, name=snap.name,
                pre_props=snap.pre, conds=tuple(conds), adds=snap.adds,
                effects=tuple(effects), grads=tuple(grads),
                dmin_reg=dmin_c, dmax_const=dmax_c,
                end_sid=send.id, start_sid=sstart.id,
                one_shot=a.id in task.one_shot,
                p_bound=task.self_overlap.get(a.id, INF),
                injected=tuple(injected)))
    for snap in task.til_snaps:
        out.append(RSnap(sid=snap.id, origin=-1, kind="til", name=snap.name,
                         pre_props=frozenset(), conds=(), adds=snap.adds,
                         effects=(), til_index=snap.til_index))
    _TABLE_CACHE[key] = out
    return out


def _mod2_templates(a, dmin_c: float):
    """Extra end conditions tying a continuous rate to the bound it must meet."""
    out = []
    conds = list(a.inv_num) + list(a.pre_end_num)
    for f, k in a.cont:
        kf = float(k)
        for c in conds:
            w = dict(c.expr.weights)
            if set(w) != {f} or c.expr.duration_coeff != 0:
                continue
            wf = float(w[f])
            base = float(c.rhs) / wf
            if kf < 0 and ((wf > 0 and c.relation in (Relation.GE, Relation.GT)) or
                           (wf < 0 and c.relation in (Relation.LE, Relation.LT))):
                out.append((f, "+", base, -kf, dmin_c))   # ub(f) >= base + |k|(dmin-el)
            if kf > 0 and ((wf > 0 and c.relation in (Relation.LE, Relation.LT)) or
                           (wf < 0 and c.relation in (Relation.GE, Relation.GT))):
                out.append((f, "-", base, kf, dmin_c))    # lb(f) <= base - k(dmin-el)
    return out


# ------------------------------------------------------------------ the engine

@dataclass
class _EngineCtx:
    mode: str
    eps: float
    snaps: list[RSnap]
    by_id: dict[int, RSnap]
    state: SearchState
    elapsed: list[tuple[float, float]]
    carry: list[tuple[int, float, float]]     # (fluent, rate, active-until)
    injected_now: dict[int, list[CondF]]      # end sid -> state-adjusted conds
    t_min: dict[int, float]
    deadline: dict[int, float]
    required: set[int]


def _prepare(state: SearchState, mode: str, eps: Q) -> tuple[_EngineCtx, dict, dict]:
    task = state.task
    epsf = float(eps)
    snaps = relax_tables(task, mode, eps)
    by_id = {s.sid: s for s in snaps}
    elapsed = scheduler.elapsed_bounds(state, eps) if state.events else []

    vmin = {f: float(v) for f, v in state.values.items()}
    vmax = dict(vmin)
    for f in sorted(state.unstable):
        vmin[f] = state.vmin[f]
        vmax[f] = state.vmax[f]
    carry: list[tuple[int, float, float]] = []
    if mode == "refined" and state.unstable:
        guards = scheduler.guard_gates(task)
        for f in sorted(state.unstable):
            lo, hi, _ = scheduler.bounds_now_refined(state, eps, f, guards)
            vmin[f], vmax[f] = lo, hi
    for idx, e in enumerate(state.events):
        el_min, el_max = elapsed[idx] if idx < len(elapsed) else (0.0, 0.0)
        dmax = float(e.dmax) if e.dmax != math.inf else INF
        remaining = INF if dmax == INF else max(dmax - el_min, 0.0)
        for f, k in task.actions[e.op].cont:
            kf = float(k)
            if mode == "basic":
                if kf > 0:
                    vmax[f] = vmax[f] + (kf * remaining if remaining < INF else INF)
                elif kf < 0:
                    vmin[f] = vmin[f] - (abs(kf) * remaining if remaining < INF else INF)
            else:
                carry.append((f, kf, remaining))

    t_min: dict[int, float] = {}
    deadline: dict[int, float] = {}
    required: set[int] = set()
    for s in snaps:
        if s.kind == "end":
            t_min[s.sid] = INF
    for idx, e in enumerate(state.events):
        sid = task.end_snap[e.op].id
        el_min, el_max = elapsed[idx] if idx < len(elapsed) else (0.0, 0.0)
        dmin = float(e.dmin)
        dmax = float(e.dmax) if e.dmax != math.inf else INF
        lo = max(0.0, dmin - el_max)
        hi = INF if dmax == INF else max(dmax - el_min, 0.0)
        t_min[sid] = min(t_min[sid], lo)
        deadline[sid] = max(deadline.get(sid, -INF), hi)
        required.add(sid)
    for snap in task.til_snaps:
        if snap.til_index < state.til_cursor:
            t_min[snap.id] = INF      # already happened
        else:
            base = task.tils[state.til_cursor].time
            t_min[snap.id] = float(task.tils[snap.til_index].time - base)

    injected_now: dict[int, list[CondF]] = {}
    by_op_elapsed: dict[int, float] = {}
    for idx, e in enumerate(state.events):
        el = elapsed[idx][1] if idx < len(elapsed) else 0.0
        by_op_elapsed[e.op] = max(by_op_elapsed.get(e.op, 0.0), el)
    for s in snaps:
        if s.kind != "end" or not s.injected:
            continue
        el = by_op_elapsed.get(s.origin, 0.0)
        rows = []
        for f, sense, base, rate, dmin_c in s.injected:
            bound = base + rate * max(dmin_c - el, 0.0)
            if sense == "+":
                rows.append(CondF(((f, 1.0),), bound))
            else:
                rows.append(CondF(((f, -1.0),), -(base - rate * max(dmin_c - el, 0.0))))
        injected_now[s.sid] = rows

    ctx = _EngineCtx(mode=mode, eps=epsf, snaps=snaps, by_id=by_id, state=state,
                     elapsed=elapsed, carry=carry, injected_now=injected_now,
                     t_min=t_min, deadline=deadline, required=required)
    return ctx, vmin, vmax


def _gradients(ctx: _EngineCtx, members: set[int], rem: dict[int, float],
               t: float) -> tuple[dict, dict]:
    """Per-fluent max/min rate after the action layer at time t."""
    dmax: dict[int, float] = {}
    dmin: dict[int, float] = {}
    if ctx.mode != "refined":
        return dmax, dmin
    exec_count: dict[int, int] = {}
    for f, k, until in ctx.carry:
        if t <= until + 1e-12 and k != 0:
            tgt = dmax if k > 0 else dmin
            tgt[f] = tgt.get(f, 0.0) + k
    for idx, e in enumerate(ctx.state.events):
        exec_count[e.op] = exec_count.get(e.op, 0) + 1
    for sid in members:
        s = ctx.by_id[sid]
        if not s.grads or rem.get(sid, INF) <= 1e-12:
            continue
        budget = s.p_bound
        if budget != INF and s.kind == "start":
            budget = max(budget - exec_count.get(s.origin, 0), 0)
        for f, k in s.grads:
            if k == 0 or budget == 0:
                continue
            contrib = INF if budget == INF else k * budget
            if k > 0:
                dmax[f] = INF if contrib == INF else dmax.get(f, 0.0) + contrib
            else:
                dmin[f] = -INF if contrib == INF else dmin.get(f, 0.0) + contrib
    return dmax, dmin


def build_trpg(state: SearchState, mode: str, eps: Q,
               max_layers: int = 5000) -> Trpg:
    task = state.task
    ctx, vmin, vmax = _prepare(state, mode, eps)
    epsf = ctx.eps

    goal_conds: list[CondF] = []
    for c in task.goal_num:
        goal_conds.extend(_cond_to_f(c, eps))

    # conditions whose satisfaction status drives layer advance
    watch: list[CondF] = list(goal_conds)
    for s in ctx.snaps:
        watch.extend(s.conds)
        watch.extend(ctx.injected_now.get(s.sid, ()))
    watch_ub: dict[int, float] = {}

    props: set[int] = set(state.props)
    members: set[int] = set()
    rem: dict[int, float] = {}
    first_snap: dict[int, float] = {}
    first_prop: dict[int, float] = {p: 0.0 for p in props}
    layers: list[Layer] = []
    fact_times = [0.0]
    bounds_at = {0.0: (dict(vmin), dict(vmax))}
    required = set(ctx.required)

    def applicable(s: RSnap, t: float) -> bool:
        if s.sid in members:
            return True
        if not s.pre_props <= props:
            return False
        if s.kind == "end":
            if ctx.t_min[s.sid] > t + 1e-12:
                return False
            for c in ctx.injected_now.get(s.sid, ()):
                if not c.sat(vmin, vmax):
                    return False
        if s.kind == "til" and ctx.t_min[s.sid] > t + 1e-12:
            return False
        return all(c.sat(vmin, vmax) for c in s.conds)

    def goals_met() -> bool:
        if not task.goal_props <= props:
            return False
        if not all(c.sat(vmin, vmax) for c in goal_conds):
            return False
        return all(sid in members for sid in required)

    t = 0.0
    prev_t = None
    for _ in range(max_layers):
        # action layer at t
        new_members = []
        for s in ctx.snaps:
            if s.sid not in members and applicable(s, t):
                members.add(s.sid)
                first_snap[s.sid] = t
                new_members.append(s)
                rem[s.sid] = INF
                if s.one_shot:
                    if s.kind == "start":
                        rem[s.sid] = s.dmax_const
                    else:
                        rem[s.sid] = max(s.dmax_const - s.dmin_reg, 0.0)
                if s.kind == "start":
                    reg = t + s.dmin_reg
                    if reg < ctx.t_min.get(s.end_sid, INF):
                        ctx.t_min[s.end_sid] = reg
        layers.append(Layer(t, set(members)))

        # fact layer at t + eps: optimistic effect aggregation, once per layer
        tf = t + epsf
        new_props = False
        inc: dict[int, float] = {}
        dec: dict[int, float] = {}
        amax: dict[int, float] = {}
        amin: dict[int, float] = {}
        for sid in members:
            s = ctx.by_id[sid]
            for p in s.adds:
                if p not in props:
                    props.add(p)
                    first_prop[p] = tf
                    new_props = True
            for e in s.effects:
                if e.op == "=":
                    amax[e.fluent] = max(amax.get(e.fluent, -INF),
                                         e.max_value(vmin, vmax))
                    amin[e.fluent] = min(amin.get(e.fluent, INF),
                                         e.min_value(vmin, vmax))
                else:
                    hi = e.max_value(vmin, vmax)
                    lo = e.min_value(vmin, vmax)
                    if hi > 0:
                        inc[e.fluent] = inc.get(e.fluent, 0.0) + hi
                    if lo < 0:
                        dec[e.fluent] = dec.get(e.fluent, 0.0) + lo
        for f in set(inc) | set(dec) | set(amax) | set(amin):
            new_hi = max(vmax[f] + inc.get(f, 0.0), amax.get(f, -INF))
            new_lo = min(vmin[f] + dec.get(f, 0.0), amin.get(f, INF))
            vmax[f] = max(vmax[f], new_hi)
            vmin[f] = min(vmin[f], new_lo)
        fact_times.append(tf)
        bounds_at[tf] = (dict(vmin), dict(vmax))

        # an epsilon step is useful only while it changes which conditions
        # could fire: new facts, new snaps, or measurable progress on some
        # still-unsatisfied watched condition (the metric-RPG fixpoint rule)
        numeric_progress = False
        for ci, c in enumerate(watch):
            prev = watch_ub.get(ci)
            cur = c.ub(vmin, vmax)
            watch_ub[ci] = cur
            if prev is None:
                continue
            if prev < c.rhs - 1e-9 and (cur > prev + 1e-12 or cur >= c.rhs - 1e-9):
                numeric_progress = True
        changed = bool(new_members) or new_props or numeric_progress

        if goals_met():
            return Trpg(layers, fact_times, bounds_at, first_snap, first_prop,
                        goal_time=tf, dead=False, required=required)

        # choose the next layer time
        dmaxg, dming = _gradients(ctx, members, rem, t)
        if changed:
            nxt = tf
        else:
            candidates: list[float] = []
            for s in ctx.snaps:
                if s.sid in members:
                    continue
                if s.kind == "end" and s.pre_props <= props and \
                        tf < ctx.t_min[s.sid] < INF:
                    candidates.append(ctx.t_min[s.sid])
                if s.kind == "til" and tf < ctx.t_min[s.sid] < INF:
                    candidates.append(ctx.t_min[s.sid])
            if ctx.mode == "refined":
                for s in ctx.snaps:
                    if s.sid in members:
                        continue
                    if not s.pre_props <= props:
                        continue
                    conds = list(s.conds)
                    if s.kind == "end":
                        conds += list(ctx.injected_now.get(s.sid, ()))
                    tcross = _crossing_time(conds, vmin, vmax, dmaxg, dming,
                                            tf, epsf)
                    if tcross is not None:
                        candidates.append(max(tcross,
                                              ctx.t_min.get(s.sid, 0.0), tf))
                if not task.goal_props - props:
                    tcross = _crossing_time(goal_conds, vmin, vmax, dmaxg,
                                            dming, tf, epsf)
                    if tcross is not None:
                        candidates.append(tcross)
                for sid, r in rem.items():
                    if 1e-12 < r < INF:
                        candidates.append(t + r)
                for f, k, until in ctx.carry:
                    if tf < until < INF:
                        candidates.append(until)
            candidates = [c for c in candidates if c > tf + 1e-12]
            nxt = min(candidates) if candidates else INF

        # required ends must fit inside their execution windows
        for sid in required:
            if sid not in members and ctx.deadline.get(sid, INF) < nxt - 1e-9:
                return Trpg(layers, fact_times, bounds_at, first_snap,
                            first_prop, None, dead=True, required=required)
        if nxt == INF:
            return Trpg(layers, fact_times, bounds_at, first_snap, first_prop,
                        None, dead=True, required=required)

        # integrate gradients from tf to nxt and decrement remaining budgets
        dt_layer = nxt - t
        if ctx.mode == "refined" and nxt > tf:
            span = nxt - tf
            for f, g in dmaxg.items():
                vmax[f] = INF if g == INF else vmax[f] + g * span
            for f, g in dming.items():
                vmin[f] = -INF if g == -INF else vmin[f] + g * span
        for sid in list(rem):
            if rem[sid] < INF:
                rem[sid] = max(rem[sid] - dt_layer, 0.0)
        bounds_at[nxt] = (dict(vmin), dict(vmax))
        if nxt not in fact_times:
            fact_times.append(nxt)
        prev_t, t = t, nxt
    return Trpg(layers, fact_times, bounds_at, first_snap, first_prop, None,
                dead=True, required=required)


def _crossing_time(conds, vmin, vmax, dmaxg, dming, tf: float, epsf: float):
    """Earliest t' >= tf at which every currently unsatisfied condition can
    hold under the gradient envelope; None when no growth helps."""
    worst = tf
    for c in conds:
        cur = c.ub(vmin, vmax)
        if cur >= c.rhs - 1e-9:
            continue
        rate = c.growth_rate(dmaxg, dming)
        if rate == INF:
            worst = max(worst, tf + epsf)   # bound blows up one layer later
            continue
        if rate <= 1e-12:
            return None
        worst = max(worst, tf + (c.rhs - cur) / rate)
    if worst <= tf:
        return None
    return worst


# ------------------------------------------------------------------ extraction

def extract_relaxed_plan(graph: Trpg, state: SearchState, mode: str,
                         eps: Q) -> RelaxedPlan:
    task = state.task
    snaps = relax_tables(task, mode, eps)
    by_id = {s.sid: s for s in snaps}
    epsf = float(eps)
    chosen: set[tuple[int, float]] = set()
    agenda: list[tuple[float, object]] = []

    def bounds_before(t: float):
        best = 0.0
        for ft in graph.fact_times:
            if ft <= t + 1e-12:
                best = max(best, ft)
        return graph.bounds_at[best]

    def achiever_of(p: int, t: float):
        cands = []
        for s in snaps:
            if p in s.adds and s.sid in graph.first_snap \
                    and graph.first_snap[s.sid] <= t - epsf + 1e-9:
                cands.append((graph.first_snap[s.sid], s.sid))
        if not cands:
            return None
        return min(cands)

    def choose(sid: int, t: float):
        if (sid, t) in chosen:
            return
        chosen.add((sid, t))
        s = by_id[sid]
        for p in s.pre_props:
            agenda.append((t, ("prop", p)))
        for c in s.conds:
            agenda.append((t, ("num", c)))
        if s.kind == "end":
            executing = any(e.op == s.origin for e in state.events)
            if not executing and s.start_sid in graph.first_snap:
                t0 = graph.first_snap[s.start_sid]
                choose(s.start_sid, t0)

    # top-level goals at the goal layer
    gt = graph.goal_time if graph.goal_time is not None else 0.0
    for p in task.goal_props:
        agenda.append((gt, ("prop", p)))
    for c in task.goal_num:
        for cf in _cond_to_f(c, eps):
            agenda.append((gt, ("num", cf)))
    # required ends of executing actions are part of any completion
    for sid in graph.required:
        if sid in graph.first_snap:
            choose(sid, graph.first_snap[sid])

    guard = 0
    while agenda and guard < 10000:
        guard += 1
        agenda.sort(key=lambda x: -x[0])
        t, item = agenda.pop(0)
        if item[0] == "prop":
            p = item[1]
            if graph.first_prop.get(p, INF) <= 1e-12 or p in state.props:
                continue
            found = achiever_of(p, max(t, graph.first_prop.get(p, 0.0) ))
            if found is None:
                continue
            layer_t, sid = found
            choose(sid, layer_t)
        else:
            c: CondF = item[1]
            vmin0, vmax0 = graph.bounds_at[0.0]
            if c.sat(vmin0, vmax0):
                continue
            _support_numeric(c, t, graph, state, by_id, choose, epsf)

    h = float(len(chosen))
    makespan = max([t for _, t in chosen], default=0.0)
    if graph.goal_time is not None:
        makespan = max(makespan, max(graph.goal_time - epsf, 0.0))
    helpful = frozenset(sid for sid, _ in chosen)
    order = sorted(chosen, key=lambda x: (x[1], x[0]))
    return RelaxedPlan(order, h, makespan, helpful)


def _support_numeric(c: CondF, t: float, graph: Trpg, state: SearchState,
                     by_id, choose, epsf: float):
    """Pick discrete contributors layer by layer until the net accumulated
    increase covers the residual; any shortfall is attributed to the
    gradient-source starts (chosen once each, at their first layer)."""
    vmin0, vmax0 = graph.bounds_at[0.0]
    need = c.rhs - c.ub(vmin0, vmax0)
    wmap = dict(c.weights)
    acc = 0.0
    for layer in graph.layers:
        if acc >= need - 1e-12:
            return
        if layer.time > t - epsf + 1e-9:
            break
        vb = graph.bounds_at.get(layer.time, graph.bounds_at[0.0])
        for sid in sorted(layer.members):
            if acc >= need - 1e-12:
                return
            s = by_id[sid]
            gain = 0.0
            for e in s.effects:
                w = wmap.get(e.fluent, 0.0)
                if w == 0 or e.op == "=":
                    continue
                contrib = e.max_value(vb[0], vb[1]) if w > 0 else \
                    e.min_value(vb[0], vb[1])
                if w * contrib > 0:
                    gain += w * contrib
            if gain > 1e-12:
                choose(sid, layer.time)
                acc += gain
    # gradient support: non-executing starts whose rates help the condition
    for sid, t0 in sorted(graph.first_snap.items(), key=lambda kv: (kv[1], kv[0])):
        if t0 > t + 1e-9:
            break
        s = by_id.get(sid)
        if s is None or s.kind != "start" or not s.grads:
            continue
        if any(wmap.get(f, 0.0) * k > 0 for f, k in s.grads):
            if not any(e.op == s.origin for e in state.events):
                choose(sid, t0)


# ----------------------------------------------------------------- entry points

@dataclass
class Evaluation:
    h: float
    makespan: float
    helpful: frozenset[int]
    admissible: float
    goal_reached: bool


def evaluate(state: SearchState, mode: str, eps: Q) -> Evaluation:
    """Relaxed-plan step count (inf on a dead end) plus tie-break makespan,
    helpful snaps and the admissible remaining-makespan estimate."""
    task = state.task
    if task.goal_props <= state.props and not state.events and \
            all(_goal_num_opt(state, c) for c in task.goal_num):
        return Evaluation(0.0, 0.0, frozenset(), 0.0, True)
    graph = build_trpg(state, mode, eps)
    if graph.dead:
        return Evaluation(INF, INF, frozenset(), INF, False)
    rp = extract_relaxed_plan(graph, state, mode, eps)
    admissible = max((graph.goal_time or 0.0) - float(eps), 0.0)
    return Evaluation(rp.h, rp.makespan, rp.helpful, admissible, False)


def _goal_num_opt(state: SearchState, cond) -> bool:
    for expr, rhs, strict in cond.ge_forms():
        total = 0.0
        for f, w in expr.weights:
            v = state.vmax[f] if w > 0 else state.vmin[f]
            total += float(w) * v
        if total < float(rhs) - 1e-9:
            return False
    return True


def admissible_makespan(state: SearchState, eps: Q) -> float:
    """Lower bound on the remaining makespan from the refined graph: the
    time of the action layer that completes the goals (0 at goal states)."""
    task = state.task
    if task.goal_props <= state.props and not state.events and \
            all(_goal_num_opt(state, c) for c in task.goal_num):
        return 0.0
    graph = build_trpg(state, "refined", eps)
    if graph.dead:
        return INF
    return max((graph.goal_time or 0.0) - float(eps), 0.0)


def build_metric_rpg(props: frozenset, vmin: dict, vmax: dict, goal_props,
                     goal_num, snaps: list[RSnap], eps: Q,
                     max_layers: int = 1000):
    """Plain metric reachability (no time-stamps): returns (layers of
    (props, vmin, vmax), goal layer index) or None when relaxed-unreachable."""
    goal_conds = []
    for c in goal_num:
        goal_conds.extend(_cond_to_f(c, eps))
    props = set(props)
    vmin = dict(vmin)
    vmax = dict(vmax)
    layers = [(frozenset(props), dict(vmin), dict(vmax))]

    def ok(s: RSnap):
        return s.pre_props <= props and all(c.sat(vmin, vmax) for c in s.conds)

    def goals():
        return set(goal_props) <= props and all(c.sat(vmin, vmax)
                                                for c in goal_conds)

    for i in range(max_layers):
        if goals():
            return layers, i
        members = [s for s in snaps if ok(s)]
        inc: dict[int, float] = {}
        dec: dict[int, float] = {}
        amax: dict[int, float] = {}
        amin: dict[int, float] = {}
        newp = set()
        for s in members:
            newp |= s.adds
            for e in s.effects:
                if e.op == "=":
                    amax[e.fluent] = max(amax.get(e.fluent, -INF),
                                         e.max_value(vmin, vmax))
                    amin[e.fluent] = min(amin.get(e.fluent, INF),
                                         e.min_value(vmin, vmax))
                else:
                    hi = e.max_value(vmin, vmax)
                    lo = e.min_value(vmin, vmax)
                    if hi > 0:
                        inc[e.fluent] = inc.get(e.fluent, 0.0) + hi
                    if lo < 0:
                        dec[e.fluent] = dec.get(e.fluent, 0.0) + lo
        changed = not newp <= props
        props |= newp
        for f in set(inc) | set(dec) | set(amax) | set(amin):
            hi = max(vmax[f] + inc.get(f, 0.0), amax.get(f, -INF))
            lo = min(vmin[f] + dec.get(f, 0.0), amin.get(f, INF))
            if hi > vmax[f] + 1e-12 or lo < vmin[f] - 1e-12:
                changed = True
            vmax[f] = max(vmax[f], hi)
            vmin[f] = min(vmin[f], lo)
        layers.append((frozenset(props), dict(vmin), dict(vmax)))
        if not changed:
            return None
    return None
