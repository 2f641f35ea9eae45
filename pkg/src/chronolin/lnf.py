"""Linear normal form (LNF) for ground numeric expressions.

Every numeric condition, effect magnitude and duration constraint in a
grounded task is reduced to ``w . v + k * ?duration + c`` with exact
rational coefficients.  Fluents that can never change are folded into the
constant before normalization, so e.g. ``(/ (- 80 (energy r)) (recharge-rate r))``
with a constant recharge-rate of 8 becomes ``-1/8 * energy + 10``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

Q = Fraction


class NonlinearError(Exception):
    """Expression is not linear after constant folding."""


class Relation(Enum):
    GE = ">="
    GT = ">"
    EQ = "="
    LT = "<"
    LE = "<="

    def flip(self) -> "Relation":
        return {
            Relation.GE: Relation.LE,
            Relation.GT: Relation.LT,
            Relation.LE: Relation.GE,
            Relation.LT: Relation.GT,
            Relation.EQ: Relation.EQ,
        }[self]

    @property
    def strict(self) -> bool:
        return self in (Relation.GT, Relation.LT)


@dataclass(frozen=True)
class LinearExpr:
    """w . v + duration_coeff * ?duration + constant, weights sorted, no zeros."""

    weights: tuple[tuple[int, Q], ...] = ()
    constant: Q = Q(0)
    duration_coeff: Q = Q(0)

    @staticmethod
    def make(weights: dict[int, Q] | None = None,
             constant: Q = Q(0),
             duration_coeff: Q = Q(0)) -> "LinearExpr":
        items = tuple(sorted((f, Q(w)) for f, w in (weights or {}).items() if w != 0))
        return LinearExpr(items, Q(constant), Q(duration_coeff))

    @staticmethod
    def const(c) -> "LinearExpr":
        return LinearExpr((), Q(c), Q(0))

    def wdict(self) -> dict[int, Q]:
        return dict(self.weights)

    @property
    def is_constant(self) -> bool:
        return not self.weights and self.duration_coeff == 0

    @property
    def fluents(self) -> frozenset[int]:
        return frozenset(f for f, _ in self.weights)

    def __add__(self, other: "LinearExpr") -> "LinearExpr":
        w = self.wdict()
        for f, c in other.weights:
            w[f] = w.get(f, Q(0)) + c
        return LinearExpr.make(w, self.constant + other.constant,
                               self.duration_coeff + other.duration_coeff)

    def __sub__(self, other: "LinearExpr") -> "LinearExpr":
        return self + other.scale(Q(-1))

    def __neg__(self) -> "LinearExpr":
        return self.scale(Q(-1))

    def scale(self, k: Q) -> "LinearExpr":
        if k == 0:
            return LinearExpr.const(0)
        return LinearExpr(tuple((f, c * k) for f, c in self.weights),
                          self.constant * k, self.duration_coeff * k)

    def substitute_duration(self, dur: Q) -> "LinearExpr":
        if self.duration_coeff == 0:
            return self
        return LinearExpr(self.weights, self.constant + self.duration_coeff * dur, Q(0))

    def evaluate(self, values, duration: Q | None = None) -> Q:
        """Exact value under a fluent valuation (mapping or indexable)."""
        total = self.constant
        for f, c in self.weights:
            total += c * values[f]
        if self.duration_coeff != 0:
            if duration is None:
                raise ValueError("expression references ?duration")
            total += self.duration_coeff * duration
        return total

    def __str__(self) -> str:
        parts = [f"{c}*v{f}" for f, c in self.weights]
        if self.duration_coeff:
            parts.append(f"{self.duration_coeff}*?duration")
        parts.append(str(self.constant))
        return " + ".join(parts)


@dataclass(frozen=True)
class NumericCondition:
    """``expr rel rhs`` with expr constant already folded into rhs."""

    expr: LinearExpr
    relation: Relation
    rhs: Q

    @staticmethod
    def make(expr: LinearExpr, relation: Relation, rhs: LinearExpr | Q) -> "NumericCondition":
        if isinstance(rhs, LinearExpr):
            expr = expr - rhs
        lhs = LinearExpr(expr.weights, Q(0), expr.duration_coeff)
        bound = (Q(rhs) if not isinstance(rhs, LinearExpr) else Q(0)) - expr.constant
        return NumericCondition(lhs, relation, bound)

    def ge_forms(self) -> list[tuple[LinearExpr, Q, bool]]:
        """Canonical >=-forms: list of (expr, bound, strict) with expr >= bound."""
        if self.relation in (Relation.GE, Relation.GT):
            return [(self.expr, self.rhs, self.relation.strict)]
        if self.relation in (Relation.LE, Relation.LT):
            return [(-self.expr, -self.rhs, self.relation.strict)]
        return [(self.expr, self.rhs, False), (-self.expr, -self.rhs, False)]

    @property
    def fluents(self) -> frozenset[int]:
        return self.expr.fluents

    def satisfied_exact(self, values, duration: Q | None = None) -> bool:
        val = self.expr.evaluate(values, duration)
        return {
            Relation.GE: val >= self.rhs,
            Relation.GT: val > self.rhs,
            Relation.EQ: val == self.rhs,
            Relation.LT: val < self.rhs,
            Relation.LE: val <= self.rhs,
        }[self.relation]

    def __str__(self) -> str:
        return f"{self.expr} {self.relation.value} {self.rhs}"


def normalize_lnf(tree, constant_fluents: dict, fluent_ids: dict) -> LinearExpr:
    """Fold an arithmetic expression tree into a LinearExpr.

    ``tree`` nodes: ('num', Q) | ('fl', key) | ('dur',) | ('+',a,b) | ('-',a,b)
    | ('*',a,b) | ('/',a,b) | ('neg',a).  Fluents in ``constant_fluents`` are
    replaced by their initial values; the rest must exist in ``fluent_ids``.
    Raises NonlinearError for products of non-constant terms or division by a
    non-constant.
    """
    op = tree[0]
    if op == "num":
        return LinearExpr.const(tree[1])
    if op == "fl":
        key = tree[1]
        if key in constant_fluents:
            return LinearExpr.const(constant_fluents[key])
        if key not in fluent_ids:
            raise KeyError(key)
        return LinearExpr.make({fluent_ids[key]: Q(1)})
    if op == "dur":
        return LinearExpr((), Q(0), Q(1))
    if op == "neg":
        return -normalize_lnf(tree[1], constant_fluents, fluent_ids)
    a = normalize_lnf(tree[1], constant_fluents, fluent_ids)
    b = normalize_lnf(tree[2], constant_fluents, fluent_ids)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        if a.is_constant:
            return b.scale(a.constant)
        if b.is_constant:
            return a.scale(b.constant)
        raise NonlinearError(f"product of non-constant terms: {a} * {b}")
    if op == "/":
        if not b.is_constant:
            raise NonlinearError(f"division by non-constant term: {b}")
        if b.constant == 0:
            raise ZeroDivisionError("division by zero in numeric expression")
        return a.scale(Q(1) / b.constant)
    raise ValueError(f"unknown operator {op!r}")
