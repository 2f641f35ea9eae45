"""Forward state-space search over snap actions.

Enforced hill-climbing with helpful-action filtering and breadth-first
plateau exploration, restarting the open list on every strict heuristic
improvement; weighted A* as the complete fallback; and a makespan-optimal
A* mode whose g is the LP-minimised prefix makespan.
"""

from __future__ import annotations

import heapq
import math
import sys
import time as _time
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction

from . import rpg, scheduler
from .lnf import Q, Relation
from .plans import PlanEntry, TimedPlan
from .state import Event, PlanStep, SearchState, initial_state
from .task import GroundedTask, SnapAction

INF = math.inf


@dataclass
class SearchConfig:
    eps: Q = Q(1, 1000)
    heuristic: str = "refined"          # 'basic' | 'refined'
    weight: float = 5.0
    force_compression: bool = False
    auto_compression: bool = True       # exploit compression-safe ends
    time_limit: float | None = None
    max_states: int | None = None
    memory_limit_mb: float | None = None
    progress: bool = False


@dataclass
class SearchResult:
    status: str                          # 'solved' | 'unsolvable' | 'resource'
    plan: TimedPlan | None = None
    makespan: float = math.nan
    state: SearchState | None = None
    schedule: list | None = None
    states_evaluated: int = 0
    optimal: bool = False


class _Budget:
    def __init__(self, cfg: SearchConfig):
        self.t0 = _time.monotonic()
        self.cfg = cfg
        self.evaluated = 0

    def exceeded(self) -> bool:
        cfg = self.cfg
        if cfg.time_limit is not None and \
                _time.monotonic() - self.t0 > cfg.time_limit:
            return True
        if cfg.max_states is not None and self.evaluated > cfg.max_states:
            return True
        if cfg.memory_limit_mb is not None:
            import resource
            rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
            if rss > cfg.memory_limit_mb:
                return True
        return False


def _cs_set(task: GroundedTask, cfg: SearchConfig) -> frozenset[int]:
    if cfg.force_compression:
        return frozenset(a.id for a in task.actions)
    if cfg.auto_compression:
        return task.compression_safe
    return frozenset()


def inv_facts(state: SearchState, skip_event: int | None = None) -> set[int]:
    out: set[int] = set()
    for idx, e in enumerate(state.events):
        if idx == skip_event:
            continue
        out |= state.task.actions[e.op].inv
    return out


def _num_cond_opt(state: SearchState, cond, eps: Q) -> bool:
    """Optimistic satisfiability against the state's value envelope."""
    for expr, rhs, strict in cond.ge_forms():
        total = 0.0
        for f, w in expr.weights:
            wf = float(w)
            v = state.vmax[f] if wf > 0 else state.vmin[f]
            if v == INF and wf > 0 or v == -INF and wf < 0:
                total = INF
                break
            total += wf * v
        bound = float(rhs) + (float(eps) if strict else 0.0)
        if total < bound - 1e-9:
            return False
    return True


@dataclass(frozen=True)
class Choice:
    snap: SnapAction
    event_index: int = -1               # end snaps: which E entry to close


def applicable_actions(state: SearchState, cfg: SearchConfig) -> list[Choice]:
    """Starts passing the optimistic filter, ends of open events, and the
    pending timed literal; compression-safe ends are auto-inserted instead
    of enumerated."""
    task = state.task
    cs = _cs_set(task, cfg)
    out: list[Choice] = []
    active_inv = inv_facts(state)
    for a in task.actions:
        snap = task.start_snap[a.id]
        if not snap.pre <= state.props:
            continue
        if not all(_num_cond_opt(state, c, cfg.eps) for c in snap.pre_num):
            continue
        if snap.dels & active_inv:
            continue
        after = (state.props - snap.dels) | snap.adds
        if not a.inv <= after:
            continue      # own invariant violated immediately
        out.append(Choice(snap))
    seen_ops: set[int] = set()
    for idx in range(len(state.events) - 1, -1, -1):   # most-recent pairing first
        e = state.events[idx]
        if e.op in cs or e.op in seen_ops:
            continue
        seen_ops.add(e.op)
        snap = task.end_snap[e.op]
        if not snap.pre <= state.props:
            continue
        if not all(_num_cond_opt(state, c, cfg.eps) for c in snap.pre_num):
            continue
        if snap.dels & inv_facts(state, skip_event=idx):
            continue
        out.append(Choice(snap, event_index=idx))
    if state.til_cursor < len(task.tils):
        snap = task.til_snaps[state.til_cursor]
        if not snap.dels & active_inv:
            out.append(Choice(snap))
    return out


def end_pairings(state: SearchState, op: int) -> list[int]:
    """Indices of open events for op, most recent first (branch order)."""
    return [idx for idx in range(len(state.events) - 1, -1, -1)
            if state.events[idx].op == op]


def _eval_dur_interval(state: SearchState, action) -> tuple:
    """Duration bounds in the current state: exact when the referenced
    fluents are exact, optimistic interval otherwise."""
    lo_candidates = []
    hi_candidates = []

    def expr_range(expr):
        lo = hi = expr.constant
        exact = True
        for f, w in expr.weights:
            if f not in state.unstable:
                lo += w * state.values[f]
                hi += w * state.values[f]
            else:
                exact = False
                wf = float(w)
                lo = float(lo) + wf * (state.vmin[f] if wf > 0 else state.vmax[f])
                hi = float(hi) + wf * (state.vmax[f] if wf > 0 else state.vmin[f])
        return lo, hi, exact

    exact_all = True
    for e in action.dur_eqs:
        lo, hi, exact = expr_range(e)
        exact_all &= exact
        lo_candidates.append(lo)
        hi_candidates.append(hi)
    for e, _ in action.dur_lbs:
        lo, hi, exact = expr_range(e)
        exact_all &= exact
        lo_candidates.append(lo)
    for e, _ in action.dur_ubs:
        lo, hi, exact = expr_range(e)
        exact_all &= exact
        hi_candidates.append(hi)
    dmin = max(lo_candidates) if lo_candidates else Q(0)
    dmax = min(hi_candidates) if hi_candidates else math.inf
    if not exact_all:
        dmin, dmax = float(dmin), (float(dmax) if dmax != math.inf else math.inf)
    return dmin, dmax


def apply_snap(state: SearchState, choice: Choice, cfg: SearchConfig) -> SearchState:
    """Progress the state; temporal feasibility is checked separately."""
    task = state.task
    snap = choice.snap
    i = len(state.plan)
    props = (state.props - snap.dels) | snap.adds
    values = dict(state.values)
    unstable = set(state.unstable)
    delta = {f: k for f, k in state.delta}
    til_cursor = state.til_cursor
    events = list(state.events)
    step = PlanStep(snap)

    if snap.kind == "til":
        til_cursor += 1
    elif snap.kind == "start":
        action = task.actions[snap.origin]
        dmin, dmax = _eval_dur_interval(state, action)
        events.append(Event(op=snap.origin, step=i, dmin=dmin, dmax=dmax))
        for f, k in action.cont:
            unstable.add(f)
            values.pop(f, None)
            delta[f] = delta.get(f, Q(0)) + k
    else:
        e = state.events[choice.event_index]
        events.pop(choice.event_index)
        step = PlanStep(snap, pair=e.step, dmin=e.dmin, dmax=e.dmax)
        action = task.actions[snap.origin]
        for f, k in action.cont:
            delta[f] = delta.get(f, Q(0)) - k

    # discrete numeric effects: exact while stable, else mark time-dependent
    fixed_dur = None
    if snap.kind in ("start", "end"):
        lo = step.dmin if snap.kind == "end" else events[-1].dmin
        hi = step.dmax if snap.kind == "end" else events[-1].dmax
        if isinstance(lo, Fraction) and lo == hi:
            fixed_dur = lo
    for e in snap.num_effects:
        refs_unstable = any(f in unstable for f in e.expr.fluents)
        needs_dur = e.expr.duration_coeff != 0
        if e.fluent in unstable or refs_unstable or (needs_dur and fixed_dur is None):
            unstable.add(e.fluent)
            values.pop(e.fluent, None)
            continue
        if e.op == "=":
            values[e.fluent] = e.expr.evaluate(values, fixed_dur)
        else:
            values[e.fluent] = values[e.fluent] + \
                e.delta_expr().evaluate(values, fixed_dur)

    child = replace(
        state,
        props=frozenset(props),
        values=values,
        unstable=frozenset(unstable),
        plan=state.plan + (step,),
        events=tuple(events),
        delta=tuple(sorted((f, k) for f, k in delta.items() if k != 0)),
        til_cursor=til_cursor,
        h=math.nan, helpful=frozenset(), h_makespan=0.0)
    return child


def settle(child: SearchState, cfg: SearchConfig):
    """Temporal-numeric consistency check; fills cached bounds.  None when
    the prefix cannot be scheduled."""
    res = scheduler.check_consistency(child, cfg.eps)
    if res is None:
        return None
    makespan, _, _ = res
    child.min_makespan = float(makespan)
    # the minimized last step becomes its cached lower bound for descendants
    lbs = list(child.step_lbs)
    while len(lbs) < len(child.plan) - 1:
        lbs.append(0.0)
    lbs.append(float(makespan))
    child.step_lbs = tuple(lbs)
    bounds = scheduler.bounds_now_basic(child, cfg.eps)
    child.vmin = dict(bounds.vmin)
    child.vmax = dict(bounds.vmax)
    for f, v in child.values.items():
        child.vmin[f] = float(v)
        child.vmax[f] = float(v)
    return child


def expand(state: SearchState, cfg: SearchConfig):
    """All settled children, compression-safe ends auto-inserted as needed."""
    out = []
    for choice in applicable_actions(state, cfg):
        if choice.snap.kind == "end":
            for idx in end_pairings(state, choice.snap.origin):
                child = settle(apply_snap(state, Choice(choice.snap, idx), cfg), cfg)
                if child is not None:
                    out.append(child)
        else:
            base = state
            ok = True
            for target in _cs_blockers(state, choice, cfg):
                j = _find_event(base, target)
                nxt = settle(apply_snap(
                    base, Choice(base.task.end_snap[target.op], j), cfg), cfg)
                if nxt is None:
                    ok = False
                    break
                base = nxt
            if not ok:
                continue
            if base is not state and choice.snap.kind != "til" and \
                    not _still_applicable(base, choice, cfg):
                continue
            child = settle(apply_snap(base, choice, cfg), cfg)
            if child is not None:
                out.append(child)
    return out


def _cs_blockers(state: SearchState, choice: Choice, cfg: SearchConfig):
    """Open compression-safe events whose invariants the snap would violate;
    their ends are inserted automatically before it."""
    cs = _cs_set(state.task, cfg)
    blocked = []
    for e in state.events:
        if e.op not in cs:
            continue
        if choice.snap.dels & state.task.actions[e.op].inv:
            blocked.append(e)
    return blocked


def _find_event(base: SearchState, target: Event) -> int:
    for j, e in enumerate(base.events):
        if e.op == target.op and e.step == target.step:
            return j
    raise AssertionError("compression-safe event vanished")


def _still_applicable(state: SearchState, choice: Choice, cfg: SearchConfig) -> bool:
    for c in applicable_actions(state, cfg):
        if c.snap.id == choice.snap.id:
            return True
    return False


def flush_cs_ends(state: SearchState, cfg: SearchConfig):
    """Append ends for remaining compression-safe events (goal-time flush).
    Returns the extended state, or None if something refuses to schedule."""
    cs = _cs_set(state.task, cfg)
    cur = state
    while cur.events:
        if not all(e.op in cs for e in cur.events):
            return None
        idx = min(range(len(cur.events)), key=lambda j: cur.events[j].step)
        snap = cur.task.end_snap[cur.events[idx].op]
        if not snap.pre <= cur.props:
            return None
        if not all(_num_cond_opt(cur, c, cfg.eps) for c in snap.pre_num):
            return None
        cur = settle(apply_snap(cur, Choice(snap, idx), cfg), cfg)
        if cur is None:
            return None
    return cur


def goal_state(state: SearchState, cfg: SearchConfig):
    """Final test: goal facts, empty event list, and an LP-verified schedule
    meeting the numeric goals pessimistically.  Returns the scheduled times
    or None."""
    task = state.task
    cur = state
    if cur.events:
        if not task.goal_props <= cur.props:
            return None
        cur = flush_cs_ends(cur, cfg)
        if cur is None:
            return None
    if not task.goal_props <= cur.props:
        return None
    for c in task.goal_num:
        stable = all(f not in cur.unstable for f in c.fluents)
        if stable and not c.satisfied_exact(
                {f: cur.values[f] for f in c.fluents} if c.fluents else {}):
            return None
    res = scheduler.check_consistency(cur, cfg.eps, goal_rows=True)
    if res is None:
        return None
    makespan, times, _ = res
    return cur, float(makespan), [float(t) for t in times]


def timed_plan(state: SearchState, times: list[float]) -> TimedPlan:
    entries = []
    for i, st in enumerate(state.plan):
        if st.snap.kind != "start":
            continue
        j = state.end_step_of(i)
        assert j is not None, "open action in a final plan"
        entries.append(PlanEntry(round(times[i], 9), st.snap.name,
                                 round(times[j] - times[i], 9)))
    entries.sort(key=lambda e: (e.time, e.action))
    return TimedPlan(entries)


def _evaluate(state: SearchState, cfg: SearchConfig, budget: _Budget):
    budget.evaluated += 1
    ev = rpg.evaluate(state, cfg.heuristic, cfg.eps)
    state.h = ev.h
    state.h_makespan = ev.makespan
    state.helpful = ev.helpful
    return ev


def _progress(cfg: SearchConfig, budget: _Budget, h: float):
    if cfg.progress:
        dt = _time.monotonic() - budget.t0
        print(f"h={h:g} states={budget.evaluated} t={dt:.2f}s",
              file=sys.stderr)


def ehc(task: GroundedTask, cfg: SearchConfig) -> SearchResult:
    """Enforced hill-climbing; 'resource'/'unsolvable' send callers to wastar."""
    budget = _Budget(cfg)
    init = initial_state(task)
    goal = goal_state(init, cfg)
    if goal is not None:
        cur, makespan, times = goal
        return SearchResult("solved", timed_plan(cur, times), makespan, cur,
                            times, budget.evaluated)
    ev = _evaluate(init, cfg, budget)
    if ev.h == INF:
        return SearchResult("unsolvable", states_evaluated=budget.evaluated)
    best_h = ev.h
    _progress(cfg, budget, best_h)
    closed = {init.dup_key()}
    open_list: deque[SearchState] = deque([init])
    while open_list:
        if budget.exceeded():
            return SearchResult("resource", states_evaluated=budget.evaluated)
        state = open_list.popleft()
        children = expand(state, cfg)
        helpful = [c for c in children
                   if c.plan[-1].snap.id in state.helpful
                   or c.plan[-1].snap.kind == "til"]
        helpful_ids = {id(c) for c in helpful}
        rest = [c for c in children if id(c) not in helpful_ids]
        improved = False
        survivors = 0
        for phase in (helpful, rest):
            for child in phase:
                key = child.dup_key()
                if key in closed:
                    continue
                closed.add(key)
                goal = goal_state(child, cfg)
                if goal is not None:
                    cur, makespan, times = goal
                    return SearchResult("solved", timed_plan(cur, times),
                                        makespan, cur, times, budget.evaluated)
                ev = _evaluate(child, cfg, budget)
                if ev.h == INF:
                    continue
                survivors += 1
                if ev.h < best_h:
                    best_h = ev.h
                    open_list = deque([child])
                    improved = True
                    _progress(cfg, budget, best_h)
                    break
                open_list.append(child)
            if improved or survivors:
                break   # unfiltered pass only when helpful produced nothing
    return SearchResult("unsolvable", states_evaluated=budget.evaluated)


def wastar(task: GroundedTask, cfg: SearchConfig) -> SearchResult:
    """Weighted A* on f = g + w*h with g = plan step count; complete over
    the snap interleavings up to the configured budget."""
    budget = _Budget(cfg)
    init = initial_state(task)
    goal = goal_state(init, cfg)
    if goal is not None:
        cur, makespan, times = goal
        return SearchResult("solved", timed_plan(cur, times), makespan, cur,
                            times, budget.evaluated)
    ev = _evaluate(init, cfg, budget)
    if ev.h == INF:
        return SearchResult("unsolvable", states_evaluated=budget.evaluated)
    counter = 0
    heap = [(cfg.weight * ev.h, ev.h, ev.makespan, 0, init)]
    best_g: dict = {init.dup_key(): 0}
    best_h = ev.h
    while heap:
        if budget.exceeded():
            return SearchResult("resource", states_evaluated=budget.evaluated)
        f, h, _, _, state = heapq.heappop(heap)
        g = len(state.plan)
        if best_g.get(state.dup_key(), INF) < g:
            continue
        goal = goal_state(state, cfg)
        if goal is not None:
            cur, makespan, times = goal
            return SearchResult("solved", timed_plan(cur, times), makespan,
                                cur, times, budget.evaluated)
        for child in expand(state, cfg):
            key = child.dup_key()
            g2 = len(child.plan)
            if best_g.get(key, INF) <= g2:
                continue
            best_g[key] = g2
            ev = _evaluate(child, cfg, budget)
            if ev.h == INF:
                continue
            if ev.h < best_h:
                best_h = ev.h
                _progress(cfg, budget, best_h)
            counter += 1
            heapq.heappush(heap, (g2 + cfg.weight * ev.h, ev.h, ev.makespan,
                                  counter, child))
    return SearchResult("unsolvable", states_evaluated=budget.evaluated)


def optimal_astar(task: GroundedTask, cfg: SearchConfig) -> SearchResult:
    """A* with g = LP-minimal prefix makespan and the admissible TRPG
    remaining-makespan estimate; optimal up to epsilon granularity."""
    budget = _Budget(cfg)
    init = initial_state(task)
    counter = 0
    h0 = rpg.admissible_makespan(init, cfg.eps)
    budget.evaluated += 1
    if h0 == INF:
        return SearchResult("unsolvable", states_evaluated=budget.evaluated)
    heap = [(h0, h0, 0, init)]
    best_g: dict = {init.dup_key(): 0.0}
    while heap:
        if budget.exceeded():
            return SearchResult("resource", states_evaluated=budget.evaluated)
        f, _, _, state = heapq.heappop(heap)
        if best_g.get(state.dup_key(), INF) < state.min_makespan - 1e-12:
            continue
        goal = goal_state(state, cfg)
        if goal is not None:
            cur, makespan, times = goal
            return SearchResult("solved", timed_plan(cur, times), makespan,
                                cur, times, budget.evaluated, optimal=True)
        for child in expand(state, cfg):
            g2 = child.min_makespan
            key = child.dup_key()
            if best_g.get(key, INF) <= g2 + 1e-12:
                continue
            best_g[key] = g2
            h = rpg.admissible_makespan(child, cfg.eps)
            budget.evaluated += 1
            if h == INF:
                continue
            counter += 1
            heapq.heappush(heap, (g2 + h, h, counter, child))
    return SearchResult("unsolvable", states_evaluated=budget.evaluated)


def solve(task: GroundedTask, cfg: SearchConfig, mode: str = "ehc-wastar"):
    """Default pipeline: EHC, then weighted A* when EHC gives up."""
    if mode == "optimal":
        return optimal_astar(task, cfg)
    if mode == "wastar":
        return wastar(task, cfg)
    res = ehc(task, cfg)
    if res.status == "solved" or mode == "ehc":
        return res
    return wastar(task, cfg)
