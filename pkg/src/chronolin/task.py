"""Search-facing grounded model: snap actions and static analyses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .lnf import LinearExpr, NumericCondition, Q, Relation


@dataclass(frozen=True)
class NumericEffect:
    fluent: int
    op: str                       # '+=' | '-=' | '='
    expr: LinearExpr              # may carry a ?duration coefficient

    def delta_expr(self) -> LinearExpr:
        """Signed contribution (only meaningful for += / -=)."""
        return self.expr if self.op == "+=" else -self.expr


@dataclass(frozen=True)
class CondEffect:
    """Restricted conditional effect on a metric-tracking fluent."""
    conditions: tuple[tuple[str, object], ...]   # (when, prop-id | NumericCondition)
    when: str                                    # effect time: 'start' | 'end'
    effect: NumericEffect


@dataclass
class GroundAction:
    id: int
    name: str
    dur_eqs: list[LinearExpr]
    dur_lbs: list[tuple[LinearExpr, bool]]       # (expr, strict)
    dur_ubs: list[tuple[LinearExpr, bool]]
    pre_start: frozenset[int]
    pre_start_num: tuple[NumericCondition, ...]
    inv: frozenset[int]
    inv_num: tuple[NumericCondition, ...]
    pre_end: frozenset[int]
    pre_end_num: tuple[NumericCondition, ...]
    add_start: frozenset[int]
    del_start: frozenset[int]
    num_start: tuple[NumericEffect, ...]
    add_end: frozenset[int]
    del_end: frozenset[int]
    num_end: tuple[NumericEffect, ...]
    cont: tuple[tuple[int, Q], ...]              # (fluent, summed gradient)
    cond_effects: tuple[CondEffect, ...] = ()

    def duration_interval_const(self) -> tuple[Q | None, Q | None]:
        """State-independent [dmin, dmax]; None where no constant bound exists."""
        lo: Q | None = None
        hi: Q | None = None
        for e in self.dur_eqs:
            if e.is_constant:
                lo = e.constant if lo is None else max(lo, e.constant)
                hi = e.constant if hi is None else min(hi, e.constant)
        for e, _ in self.dur_lbs:
            if e.is_constant:
                lo = e.constant if lo is None else max(lo, e.constant)
        for e, _ in self.dur_ubs:
            if e.is_constant:
                hi = e.constant if hi is None else min(hi, e.constant)
        return lo, hi

    @property
    def fixed_duration(self) -> Q | None:
        """Constant duration when the constraints pin a single known value."""
        if len(self.dur_eqs) == 1 and self.dur_eqs[0].is_constant \
                and not self.dur_lbs and not self.dur_ubs:
            return self.dur_eqs[0].constant
        return None


@dataclass(frozen=True)
class SnapAction:
    id: int
    origin: int                                  # GroundAction id, -1 for TILs
    kind: str                                    # 'start' | 'end' | 'til'
    name: str
    pre: frozenset[int]
    pre_num: tuple[NumericCondition, ...]
    adds: frozenset[int]
    dels: frozenset[int]
    num_effects: tuple[NumericEffect, ...]
    til_index: int = -1


@dataclass(frozen=True)
class Til:
    index: int
    time: Q
    adds: frozenset[int]
    dels: frozenset[int]


@dataclass
class Metric:
    sense: str                                   # 'minimize' | 'maximize'
    weights: dict[int, Q]
    total_time_coeff: Q
    constant: Q

    def evaluate(self, values, makespan) -> float:
        total = float(self.constant) + float(self.total_time_coeff) * float(makespan)
        for f, w in self.weights.items():
            total += float(w) * float(values[f])
        return total


@dataclass
class GroundedTask:
    propositions: list[str]
    fluents: list[str]
    actions: list[GroundAction]
    init_props: frozenset[int]
    init_fluents: dict[int, Q]
    tils: list[Til]
    goal_props: frozenset[int]
    goal_num: tuple[NumericCondition, ...]
    metric: Metric
    snaps: list[SnapAction] = field(default_factory=list)
    start_snap: dict[int, SnapAction] = field(default_factory=dict)
    end_snap: dict[int, SnapAction] = field(default_factory=dict)
    til_snaps: list[SnapAction] = field(default_factory=list)
    compression_safe: frozenset[int] = frozenset()
    one_shot: frozenset[int] = frozenset()
    metric_tracking: frozenset[int] = frozenset()
    self_overlap: dict[int, float] = field(default_factory=dict)

    def finalize(self) -> "GroundedTask":
        self.snaps = []
        for a in self.actions:
            s, e = split_snap_actions(a, len(self.snaps))
            self.snaps.extend([s, e])
            self.start_snap[a.id] = s
            self.end_snap[a.id] = e
        self.til_snaps = []
        for t in self.tils:
            snap = SnapAction(id=len(self.snaps), origin=-1, kind="til",
                              name=f"til@{t.time}", pre=frozenset(), pre_num=(),
                              adds=t.adds, dels=t.dels, num_effects=(),
                              til_index=t.index)
            self.snaps.append(snap)
            self.til_snaps.append(snap)
        self.compression_safe = analyze_compression_safe(self)
        self.one_shot = analyze_one_shot(self)
        self.metric_tracking = detect_metric_tracking(self)
        self.self_overlap = {a.id: self_overlap_bound(self, a) for a in self.actions}
        return self

    # convenience
    def action(self, name: str) -> GroundAction:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    def prop_id(self, name: str) -> int:
        return self.propositions.index(name)

    def fluent_id(self, name: str) -> int:
        return self.fluents.index(name)


def split_snap_actions(a: GroundAction, next_id: int) -> tuple[SnapAction, SnapAction]:
    """Start carries pre/eff at start, end carries pre/eff at end.

    Invariants are tracked separately through the executing-action list and
    are folded into neither snap.
    """
    start = SnapAction(id=next_id, origin=a.id, kind="start", name=a.name,
                       pre=a.pre_start, pre_num=a.pre_start_num,
                       adds=a.add_start, dels=a.del_start, num_effects=a.num_start)
    end = SnapAction(id=next_id + 1, origin=a.id, kind="end", name=a.name,
                     pre=a.pre_end, pre_num=a.pre_end_num,
                     adds=a.add_end, dels=a.del_end, num_effects=a.num_end)
    return start, end


def recombine(start: SnapAction, end: SnapAction, original: GroundAction) -> GroundAction:
    """Inverse of split for the round-trip property (invariants from original)."""
    import dataclasses
    return dataclasses.replace(
        original,
        pre_start=start.pre, pre_start_num=start.pre_num,
        add_start=start.adds, del_start=start.dels, num_start=start.num_effects,
        pre_end=end.pre, pre_end_num=end.pre_num,
        add_end=end.adds, del_end=end.dels, num_end=end.num_effects)


def analyze_compression_safe(task: GroundedTask) -> frozenset[int]:
    """Conservative set of actions whose end snap needs no search decision.

    Requires: no end preconditions, no end effects at all (the end merely
    releases the action's invariants), and a fixed constant duration.
    """
    safe = set()
    for a in task.actions:
        if a.pre_end or a.pre_end_num or a.add_end or a.del_end or a.num_end:
            continue
        if a.fixed_duration is None:
            continue
        safe.add(a.id)
    return frozenset(safe)


def analyze_one_shot(task: GroundedTask) -> frozenset[int]:
    """Sufficient syntactic test: a start precondition is deleted at start
    and re-added by no action and no TIL."""
    adders: set[int] = set()
    for a in task.actions:
        adders |= a.add_start | a.add_end
    for t in task.tils:
        adders |= t.adds
    out = set()
    for a in task.actions:
        for p in a.pre_start & a.del_start:
            if p not in adders:
                out.add(a.id)
                break
    return frozenset(out)


def detect_metric_tracking(task: GroundedTask) -> frozenset[int]:
    """Fluents in the metric that no condition, duration or goal ever reads."""
    candidates = set(task.metric.weights)
    read: set[int] = set()
    for a in task.actions:
        for conds in (a.pre_start_num, a.inv_num, a.pre_end_num):
            for c in conds:
                read |= c.fluents
        for e in a.dur_eqs:
            read |= e.fluents
        for e, _ in a.dur_lbs:
            read |= e.fluents
        for e, _ in a.dur_ubs:
            read |= e.fluents
    for c in task.goal_num:
        read |= c.fluents
    return frozenset(candidates - read)


def self_overlap_bound(task: GroundedTask, a: GroundAction) -> float:
    """1 when the start requires-and-deletes a fact only this action's end
    re-adds (the mutex-with-self idiom), else unbounded."""
    for p in a.pre_start & a.del_start:
        added_elsewhere = False
        for b in task.actions:
            if p in b.add_start or (p in b.add_end and b.id != a.id):
                added_elsewhere = True
                break
        if added_elsewhere:
            continue
        if any(p in t.adds for t in task.tils):
            continue
        if p in a.add_end:
            return 1
    return math.inf
