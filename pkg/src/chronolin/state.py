"""Search state: facts, plan prefix, executing actions, temporal handle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .lnf import Q
from .task import GroundedTask, SnapAction


@dataclass(frozen=True)
class PlanStep:
    snap: SnapAction
    pair: int = -1          # end snaps: plan index of the matching start
    dmin: object = None     # end snaps: duration bounds recorded at the start
    dmax: object = None


@dataclass(frozen=True)
class Event:
    """A started but unfinished action: <op, i, dmin, dmax>.

    Duration bounds are evaluated in the state the action started from and
    stay fixed; they are exact rationals whenever that state was exact.
    """
    op: int
    step: int
    dmin: object            # Fraction | float
    dmax: object            # Fraction | float | math.inf


@dataclass
class SearchState:
    task: GroundedTask
    props: frozenset[int]
    values: dict[int, Q]                    # exact values of stable fluents
    vmin: dict[int, float]                  # reachable-value bounds, all fluents
    vmax: dict[int, float]
    unstable: frozenset[int]
    plan: tuple[PlanStep, ...] = ()
    events: tuple[Event, ...] = ()
    delta: tuple[tuple[int, Q], ...] = ()   # gradient profile after last step
    til_cursor: int = 0
    step_lbs: tuple[float, ...] = ()        # cached minimized step times
    min_makespan: float = 0.0
    stn: object = None                      # Stn when the prefix is pure-temporal
    # heuristic results, filled by evaluation
    h: float = math.nan
    h_makespan: float = 0.0
    helpful: frozenset[int] = frozenset()

    def delta_of(self, fluent: int) -> Q:
        for f, k in self.delta:
            if f == fluent:
                return k
        return Q(0)

    def end_step_of(self, start_index: int) -> int | None:
        """Plan index of the end snap paired with the start at start_index."""
        for j in range(start_index + 1, len(self.plan)):
            st = self.plan[j]
            if st.snap.kind == "end" and st.pair == start_index:
                return j
        return None

    def event_for_step(self, start_index: int) -> Event | None:
        for e in self.events:
            if e.step == start_index:
                return e
        return None

    def dup_key(self):
        ev = tuple(sorted((e.op, _round(e.dmin), _round(e.dmax)) for e in self.events))
        bounds = tuple(sorted((f, _round(self.vmin[f]), _round(self.vmax[f]))
                              for f in self.unstable))
        dl = tuple(sorted((f, k) for f, k in self.delta if k != 0))
        return (self.props, ev, self.til_cursor, bounds, dl)


def _round(x) -> float:
    if x == math.inf:
        return math.inf
    return round(float(x), 6)


def initial_state(task: GroundedTask) -> SearchState:
    values = dict(task.init_fluents)
    return SearchState(
        task=task,
        props=task.init_props,
        values=values,
        vmin={f: float(v) for f, v in values.items()},
        vmax={f: float(v) for f, v in values.items()},
        unstable=frozenset())
