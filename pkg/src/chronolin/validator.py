"""Independent plan checker under continuous-linear semantics.

Replays a timed plan as a piecewise-linear trajectory and checks every
commitment the planner is supposed to honour: separation, pairing,
durations, conditions at instants, invariants over open intervals (their
segment endpoints, the action's own instants excluded), timed literals and
the final goal.  Also computes the metric value, conditional effects
included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .lnf import LinearExpr, NumericCondition, Q, Relation
from .plans import TimedPlan
from .task import GroundedTask

TOL = 1e-6


@dataclass
class Violation:
    time: float
    culprit: str
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.kind}] t={self.time:.6f} {self.culprit}: {self.detail}"


@dataclass
class Report:
    violations: list[Violation]
    makespan: float = 0.0
    metric: float = math.nan

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class _Happening:
    time: float
    kind: str              # 'start' | 'end' | 'til'
    action: object = None
    entry_index: int = -1
    til_index: int = -1
    duration: float = 0.0


def _expr_value(expr: LinearExpr, values: dict, duration: float | None = None) -> float:
    total = float(expr.constant)
    for f, w in expr.weights:
        total += float(w) * values[f]
    if expr.duration_coeff != 0:
        total += float(expr.duration_coeff) * float(duration)
    return total


def _cond_holds(cond: NumericCondition, values: dict,
                duration: float | None = None) -> bool:
    v = _expr_value(cond.expr, values, duration)
    r = float(cond.rhs)
    # strict relations get the tolerance against them: a value within TOL of
    # the bound does not count as strictly beyond it
    return {
        Relation.GE: v >= r - TOL,
        Relation.GT: v > r + TOL,
        Relation.EQ: abs(v - r) <= TOL,
        Relation.LT: v < r - TOL,
        Relation.LE: v <= r + TOL,
    }[cond.relation]


class _CondEffectTracker:
    """Evaluates one conditional effect across its action's execution."""

    def __init__(self, ce):
        self.ce = ce
        self.alive = True

    def at_start(self, props, values):
        for when, cond in self.ce.conditions:
            if when != "start":
                continue
            if isinstance(cond, int):
                if cond not in props:
                    self.alive = False
            elif cond.expr.duration_coeff == 0 and not _cond_holds(cond, values):
                self.alive = False

    def sample(self, props, values):
        """Over-all conditions, checked at every segment endpoint inside."""
        if not self.alive:
            return
        for when, cond in self.ce.conditions:
            if when != "inv":
                continue
            if isinstance(cond, int):
                if cond not in props:
                    self.alive = False
            elif not _cond_holds(cond, values):
                self.alive = False

    def at_end(self, props, values, duration):
        for when, cond in self.ce.conditions:
            if isinstance(cond, int):
                if when == "end" and cond not in props:
                    self.alive = False
            elif cond.expr.duration_coeff != 0:
                if not _cond_holds(cond, values, duration):
                    self.alive = False
            elif when == "end" and not _cond_holds(cond, values):
                self.alive = False
        return self.alive


def validate(task: GroundedTask, plan: TimedPlan, eps: float = 0.001) -> Report:
    out: list[Violation] = []
    names = {a.name: a for a in task.actions}

    happenings: list[_Happening] = []
    for i, e in enumerate(plan.entries):
        if not math.isfinite(e.time) or not math.isfinite(e.duration) \
                or e.time < -TOL or e.duration <= 0:
            return Report([Violation(0.0, e.action, "structural",
                                     "bad time or duration")])
        if e.action not in names:
            return Report([Violation(e.time, e.action, "structural",
                                     "unknown ground action")])
        happenings.append(_Happening(e.time, "start", names[e.action], i,
                                     duration=e.duration))
        happenings.append(_Happening(e.time + e.duration, "end",
                                     names[e.action], i, duration=e.duration))
    for til in task.tils:
        happenings.append(_Happening(float(til.time), "til",
                                     til_index=til.index))
    happenings.sort(key=lambda h: (h.time, 0 if h.kind == "til" else 1,
                                   h.entry_index))

    for a, b in zip(happenings, happenings[1:]):
        if b.time - a.time < eps - TOL:
            out.append(Violation(b.time, _name(b), "separation",
                                 f"within epsilon of {_name(a)}"))

    props = set(task.init_props)
    values = {f: float(v) for f, v in task.init_fluents.items()}
    open_intervals: dict[int, object] = {}           # entry index -> action
    trackers: dict[int, list[_CondEffectTracker]] = {}
    cond_extra: dict[int, float] = {}

    def gradient() -> dict[int, float]:
        g: dict[int, float] = {}
        for action in open_intervals.values():
            for f, k in action.cont:
                g[f] = g.get(f, 0.0) + float(k)
        return g

    prev_t = 0.0
    for h in happenings:
        dt = h.time - prev_t
        if dt < -TOL:
            return Report([Violation(h.time, _name(h), "structural",
                                     "happenings out of order")])
        for f, k in gradient().items():
            values[f] += k * max(dt, 0.0)
        prev_t = h.time

        # segment endpoint just before the happening: invariants of every
        # open action (the ending action's own pre-end point is included,
        # matching the open-interval limit semantics)
        for idx, action in open_intervals.items():
            _check_invariants(out, action, props, values, h.time)
            for tr in trackers.get(idx, ()):
                tr.sample(props, values)

        if h.kind == "til":
            til = task.tils[h.til_index]
            props -= set(til.dels)
            props |= set(til.adds)
        elif h.kind == "start":
            action = h.action
            snap = task.start_snap[action.id]
            _check_conditions(out, snap, props, values, h.time, "start")
            dmin, dmax = _duration_bounds(action, values)
            if h.duration < dmin - TOL or h.duration > dmax + TOL:
                out.append(Violation(
                    h.time, action.name, "duration",
                    f"duration {h.duration:.6f} outside [{dmin:.6f}, {dmax:.6f}]"))
            trackers[h.entry_index] = [
                _CondEffectTracker(ce) for ce in action.cond_effects]
            for tr in trackers[h.entry_index]:
                tr.at_start(props, values)
            _apply_effects(snap, props, values, h.duration)
            open_intervals[h.entry_index] = action
        else:
            action = h.action
            if h.entry_index not in open_intervals:
                return Report([Violation(h.time, action.name, "structural",
                                         "end with no matching start")])
            snap = task.end_snap[action.id]
            _check_conditions(out, snap, props, values, h.time, "end")
            for tr in trackers.get(h.entry_index, ()):
                if tr.at_end(props, values, h.duration):
                    e = tr.ce.effect
                    delta = _expr_value(e.expr, values, h.duration)
                    cond_extra[e.fluent] = cond_extra.get(e.fluent, 0.0) + \
                        (delta if e.op in ("+=", "=") else -delta)
            del open_intervals[h.entry_index]
            _apply_effects(snap, props, values, h.duration)

        # segment endpoint just after the happening (post-effect values);
        # an action just ended is already excluded, one just started is in
        for idx, action in open_intervals.items():
            _check_invariants(out, action, props, values, h.time)
            for tr in trackers.get(idx, ()):
                tr.sample(props, values)

    for idx, action in open_intervals.items():
        out.append(Violation(plan.makespan, action.name, "structural",
                             "action never ends"))
    if not task.goal_props <= props:
        missing = sorted(task.goal_props - props)
        out.append(Violation(plan.makespan, "goal", "goal",
                             "unsatisfied goal facts: " +
                             ", ".join(task.propositions[p] for p in missing)))
    for c in task.goal_num:
        if not _cond_holds(c, values):
            out.append(Violation(plan.makespan, "goal", "goal",
                                 f"numeric goal violated: {c}"))

    final_values = dict(values)
    for f, extra in cond_extra.items():
        final_values[f] = final_values.get(f, 0.0) + extra
    metric = task.metric.evaluate(final_values, plan.makespan)
    return Report(out, plan.makespan, metric)


def _name(h: _Happening) -> str:
    if h.kind == "til":
        return f"til#{h.til_index}"
    return f"{h.action.name} ({h.kind})"


def _check_conditions(out, snap, props, values, t, label):
    for p in snap.pre:
        if p not in props:
            out.append(Violation(t, snap.name, "precondition",
                                 f"missing fact at {label}"))
    for c in snap.pre_num:
        if not _cond_holds(c, values):
            out.append(Violation(t, snap.name, "precondition",
                                 f"numeric condition violated at {label}: {c}"))


def _check_invariants(out, action, props, values, t):
    for p in action.inv:
        if p not in props:
            out.append(Violation(t, action.name, "invariant",
                                 "invariant fact does not hold"))
    for c in action.inv_num:
        if not _cond_holds(c, values):
            out.append(Violation(t, action.name, "invariant",
                                 f"numeric invariant violated: {c}"))


def _apply_effects(snap, props, values, duration):
    props -= set(snap.dels)
    props |= set(snap.adds)
    pre_values = dict(values)
    for e in snap.num_effects:
        if e.op == "=":
            values[e.fluent] = _expr_value(e.expr, pre_values, duration)
        else:
            values[e.fluent] += _expr_value(e.delta_expr(), pre_values, duration)


def _duration_bounds(action, values) -> tuple[float, float]:
    lo, hi = 0.0, math.inf
    for e in action.dur_eqs:
        v = _expr_value(e, values)
        lo, hi = max(lo, v), min(hi, v)
    for e, _strict in action.dur_lbs:
        lo = max(lo, _expr_value(e, values))
    for e, _strict in action.dur_ubs:
        hi = min(hi, _expr_value(e, values))
    return lo, hi
