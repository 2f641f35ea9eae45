from fractions import Fraction as Q

import pytest

from chronolin.lnf import (LinearExpr, NonlinearError, NumericCondition,
                           Relation, normalize_lnf)


def test_recharge_duration_folds_to_linear():
    # (/ (- 80 (energy r)) (recharge-rate r)) with recharge-rate constant 8
    tree = ("/", ("-", ("num", Q(80)), ("fl", "energy")),
            ("fl", "recharge-rate"))
    expr = normalize_lnf(tree, {"recharge-rate": Q(8)}, {"energy": 0})
    assert expr.wdict() == {0: Q(-1, 8)}
    assert expr.constant == Q(10)
    assert expr.duration_coeff == 0


def test_literal_constant():
    expr = normalize_lnf(("num", Q(5)), {}, {})
    assert expr.weights == () and expr.constant == Q(5)


def test_product_of_fluents_rejected():
    tree = ("*", ("fl", "energy"), ("fl", "energy"))
    with pytest.raises(NonlinearError):
        normalize_lnf(tree, {}, {"energy": 0})


def test_division_by_fluent_rejected():
    tree = ("/", ("num", Q(1)), ("fl", "energy"))
    with pytest.raises(NonlinearError):
        normalize_lnf(tree, {}, {"energy": 0})


def test_zero_weights_are_dropped():
    tree = ("-", ("fl", "x"), ("fl", "x"))
    expr = normalize_lnf(tree, {}, {"x": 0})
    assert expr.weights == ()


def test_duration_coefficient():
    tree = ("*", ("num", Q(3)), ("dur",))
    expr = normalize_lnf(tree, {}, {})
    assert expr.duration_coeff == Q(3)


def test_arithmetic_ops():
    a = LinearExpr.make({0: Q(2)}, Q(1))
    b = LinearExpr.make({0: Q(-2), 1: Q(1)}, Q(3))
    s = a + b
    assert s.wdict() == {1: Q(1)} and s.constant == Q(4)
    assert (a - a).is_constant
    assert a.scale(Q(0)).is_constant


def test_condition_canonical_ge_forms():
    expr = LinearExpr.make({0: Q(1)}, Q(2))
    cond = NumericCondition.make(expr, Relation.LE, Q(6))
    # constant folded into the bound: x + 2 <= 6  ->  x <= 4
    assert cond.expr.constant == 0 and cond.rhs == Q(4)
    forms = cond.ge_forms()
    assert len(forms) == 1
    ge, bound, strict = forms[0]
    assert ge.wdict() == {0: Q(-1)} and bound == Q(-4) and not strict

    eq = NumericCondition.make(expr, Relation.EQ, Q(6))
    assert len(eq.ge_forms()) == 2


def test_condition_exact_evaluation():
    cond = NumericCondition.make(LinearExpr.make({0: Q(1)}), Relation.GT, Q(3))
    assert cond.satisfied_exact({0: Q(4)})
    assert not cond.satisfied_exact({0: Q(3)})
