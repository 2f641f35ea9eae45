from fractions import Fraction as Q

import pytest

from chronolin.pddl import (InputError, PddlSyntaxError,
                            UnsupportedConstructError, parse_domain,
                            parse_problem, unparse_domain, unparse_problem)
from conftest import fixture_text


def test_borrower_domain_structure():
    dom = parse_domain(fixture_text("borrower-domain.pddl"))
    assert [a.name for a in dom.actions] == ["savehard", "lifeaudit",
                                             "takemortgage"]
    save = dom.actions[0]
    assert save.cont == [("+", ("money",), ("num", Q(1)))]
    assert len(save.duration) == 1
    take = dom.actions[2]
    assert take.params == [("?m", "mortgage")]
    # interest is a continuous decrease
    assert take.cont[0][0] == "-"


def test_empty_domain_body():
    dom = parse_domain("(define (domain empty))")
    assert dom.actions == []


def test_landing_conditional_effects():
    dom = parse_domain(fixture_text("landing-domain.pddl"))
    land = dom.actions[0]
    assert len(land.cond_effects) == 2
    for ce in land.cond_effects:
        assert ce.effect.kind == "num"
        # both conditions and magnitudes are duration-dependent
        assert any(_mentions_duration(c.lhs) or _mentions_duration(c.rhs)
                   for c in ce.conditions)
        assert _mentions_duration(ce.effect.expr)


def _mentions_duration(tree) -> bool:
    if tree is None:
        return False
    if tree[0] == "dur":
        return True
    if tree[0] in ("num", "fl"):
        return False
    return any(_mentions_duration(t) for t in tree[1:])


def test_borrower_problem():
    prob = parse_problem(fixture_text("borrower-problem.pddl"))
    fl = dict(prob.init_fluents)
    assert fl[("money",)] == 0
    assert fl[("patience",)] == 4
    assert [g.atom for g in prob.goal] == [("happy",)]
    assert prob.metric == ("minimize", ("fl", ("total-time",)))


def test_default_metric_is_total_time():
    prob = parse_problem("(define (problem p) (:domain d) (:init) (:goal (and (g))))")
    assert prob.metric == ("minimize", ("fl", ("total-time",)))


def test_duplicate_fluent_assignment_rejected():
    with pytest.raises(InputError):
        parse_problem("(define (problem p) (:domain d)"
                      " (:init (= (x) 1) (= (x) 2)) (:goal (and (g))))")


def test_timed_initial_literals():
    prob = parse_problem(
        "(define (problem p) (:domain d)"
        " (:init (at 5 (open)) (at 9.5 (not (open)))) (:goal (and (g))))")
    assert prob.tils == [(Q(5), True, ("open",)), (Q(19, 2), False, ("open",))]


def test_syntax_errors_have_positions():
    with pytest.raises(PddlSyntaxError):
        parse_domain("(define (domain d) (:durative-action")
    with pytest.raises(PddlSyntaxError):
        parse_domain("(define (domain d)))")


def test_unsupported_constructs_are_named():
    with pytest.raises(UnsupportedConstructError) as err:
        parse_domain("(define (domain d) (:action a :parameters ()))")
    assert ":action" in str(err.value)
    with pytest.raises(UnsupportedConstructError):
        parse_domain("""
            (define (domain d)
              (:durative-action a :parameters ()
                :duration (= ?duration 1)
                :condition (and (at start (forall (?x) (p ?x))))
                :effect (and (at end (q)))))""")


def test_at_end_duration_constraint_rejected():
    with pytest.raises(UnsupportedConstructError):
        parse_domain("""
            (define (domain d)
              (:durative-action a :parameters ()
                :duration (at end (= ?duration (x)))
                :effect (and (at end (q)))))""")


@pytest.mark.parametrize("name", [
    "borrower-domain.pddl", "match-domain.pddl", "coordination-domain.pddl",
    "landing-domain.pddl", "airport-domain.pddl", "rovers-domain.pddl",
    "cafe-domain.pddl"])
def test_domain_round_trip(name):
    dom = parse_domain(fixture_text(name))
    again = parse_domain(unparse_domain(dom))
    assert again == dom


@pytest.mark.parametrize("name", [
    "borrower-problem.pddl", "match-problem.pddl", "landing-2plane.pddl",
    "rovers-1rover.pddl", "cafe-tea-first.pddl"])
def test_problem_round_trip(name):
    prob = parse_problem(fixture_text(name))
    again = parse_problem(unparse_problem(prob))
    assert again == prob
