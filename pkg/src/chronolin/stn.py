"""Simple temporal network with exact rational arithmetic.

A constraint ``lb <= t(b) - t(a) <= ub`` is stored as edge a->b with weight
ub and edge b->a with weight -lb; the network is consistent iff the
distance graph has no negative-cost cycle.  Every node is implicitly at or
after the origin ``alpha`` (time 0), so earliest times are recovered from
shortest paths to the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .lnf import Q

ALPHA = "alpha"


@dataclass
class Stn:
    edges: dict = field(default_factory=dict)       # (a, b) -> weight (t_b - t_a <= w)
    succ: dict = field(default_factory=dict)
    pred: dict = field(default_factory=dict)
    nodes: set = field(default_factory=set)
    pot: dict = field(default_factory=dict)         # virtual-source potentials
    consistent_flag: bool = True

    def __post_init__(self):
        if ALPHA not in self.nodes:
            self.nodes.add(ALPHA)
            self.succ[ALPHA] = set()
            self.pred[ALPHA] = set()
            self.pot[ALPHA] = Q(0)

    def copy(self) -> "Stn":
        return Stn(edges=dict(self.edges),
                   succ={k: set(v) for k, v in self.succ.items()},
                   pred={k: set(v) for k, v in self.pred.items()},
                   nodes=set(self.nodes),
                   pot=dict(self.pot),
                   consistent_flag=self.consistent_flag)

    def add_node(self, n) -> None:
        if n in self.nodes:
            return
        self.nodes.add(n)
        self.succ.setdefault(n, set())
        self.pred.setdefault(n, set())
        self.pot[n] = Q(0)
        self._add_edge(n, ALPHA, Q(0))              # t(n) >= t(alpha) = 0

    def _add_edge(self, a, b, w) -> bool:
        if w == math.inf:
            return False
        key = (a, b)
        old = self.edges.get(key)
        if old is not None and old <= w:
            return False
        self.edges[key] = w
        self.succ[a].add(b)
        self.pred[b].add(a)
        return True

    def add_constraint(self, a, b, lb, ub=math.inf) -> list:
        """lb <= t(b) - t(a) <= ub; returns the edges that got tighter."""
        if lb > ub:
            raise ValueError(f"lb {lb} > ub {ub}")
        self.add_node(a)
        self.add_node(b)
        touched = []
        if ub != math.inf and self._add_edge(a, b, Q(ub)):
            touched.append((a, b))
        if lb != -math.inf and self._add_edge(b, a, -Q(lb)):
            touched.append((b, a))
        return touched

    # -- consistency ---------------------------------------------------------

    def propagate(self, touched=None) -> bool:
        """Relax potentials; returns False iff a negative cycle exists.

        Potentials are shortest distances from a virtual source with 0-cost
        edges to every node, so any negative cycle drives some potential
        down forever; a per-node relaxation counter detects that.  With
        ``touched`` (recently tightened edges) only the affected region is
        re-relaxed; the verdict matches a full recomputation.
        """
        if touched is None:
            for n in self.nodes:
                self.pot[n] = Q(0)
            queue = list(self.nodes)
        else:
            queue = sorted({a for a, _ in touched}, key=str)
        counts: dict = {}
        bound = len(self.nodes) + 1
        seen = set(queue)
        while queue:
            a = queue.pop(0)
            seen.discard(a)
            pa = self.pot[a]
            for b in self.succ[a]:
                cand = pa + self.edges[(a, b)]
                if cand < self.pot[b]:
                    self.pot[b] = cand
                    counts[b] = counts.get(b, 0) + 1
                    if counts[b] > bound:
                        self.consistent_flag = False
                        return False
                    if b not in seen:
                        queue.append(b)
                        seen.add(b)
        self.consistent_flag = True
        return True

    def negative_cycle_witness(self) -> list:
        """Bellman-Ford with parent tracking; nodes on some negative cycle."""
        dist = {n: Q(0) for n in self.nodes}
        parent: dict = {}
        last = None
        for _ in range(len(self.nodes)):
            last = None
            for (a, b), w in sorted(self.edges.items(), key=str):
                if dist[a] + w < dist[b]:
                    dist[b] = dist[a] + w
                    parent[b] = a
                    last = b
            if last is None:
                return []
        node = last
        for _ in range(len(self.nodes)):
            node = parent[node]
        cycle = [node]
        cur = parent[node]
        while cur != node:
            cycle.append(cur)
            cur = parent[cur]
        cycle.reverse()
        return cycle

    def earliest_schedule(self) -> dict | None:
        """Earliest times for all nodes, or None if inconsistent.

        earliest(x) = -(shortest path x -> alpha); the implicit x >= alpha
        edges guarantee the path exists.
        """
        if not self.propagate():
            return None
        dist = {n: math.inf for n in self.nodes}
        dist[ALPHA] = Q(0)
        queue = [ALPHA]
        seen = {ALPHA}
        while queue:
            b = queue.pop(0)
            seen.discard(b)
            db = dist[b]
            for a in self.pred[b]:
                cand = db + self.edges[(a, b)]
                if cand < dist[a]:
                    dist[a] = cand
                    if a not in seen:
                        queue.append(a)
                        seen.add(a)
        return {n: -dist[n] for n in self.nodes}


def consistent(stn: Stn):
    """Earliest-time schedule or None (inconsistent)."""
    return stn.earliest_schedule()


def incremental_propagate(stn: Stn, constraints) -> bool:
    """Add (a, b, lb, ub) constraints and propagate incrementally."""
    touched = []
    for a, b, lb, ub in constraints:
        touched.extend(stn.add_constraint(a, b, lb, ub))
    if not stn.consistent_flag:
        return False
    if not touched:
        return True
    return stn.propagate(touched)


def floyd_warshall(stn: Stn):
    """Reference oracle: all-pairs distances, or None on a negative cycle."""
    nodes = sorted(stn.nodes, key=str)
    idx = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    dist = [[math.inf] * n for _ in range(n)]
    for i in range(n):
        dist[i][i] = Q(0)
    for (a, b), w in stn.edges.items():
        i, j = idx[a], idx[b]
        if w < dist[i][j]:
            dist[i][j] = w
    for k in range(n):
        for i in range(n):
            dik = dist[i][k]
            if dik == math.inf:
                continue
            row_k = dist[k]
            row_i = dist[i]
            for j in range(n):
                if row_k[j] != math.inf and dik + row_k[j] < row_i[j]:
                    row_i[j] = dik + row_k[j]
    for i in range(n):
        if dist[i][i] < 0:
            return None
    return {(a, b): dist[idx[a]][idx[b]] for a in nodes for b in nodes}
