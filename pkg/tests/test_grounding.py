import itertools
from fractions import Fraction as Q

import pytest

from chronolin.grounding import GroundingBlowupError, ground
from chronolin.lnf import LinearExpr
from chronolin.pddl import InputError, parse_domain, parse_problem
from conftest import fixture_text, load_task


def test_borrower_ground_action_set(borrower):
    names = sorted(a.name for a in borrower.actions)
    assert names == ["lifeaudit", "savehard",
                     "takemortgage longmortgage", "takemortgage shortmortgage"]
    # constant fluents folded away: only money carries an index
    assert borrower.fluents == ["money"]
    take = borrower.action("takemortgage longmortgage")
    assert take.num_start[0].expr.constant == Q(1)   # deposit folded
    assert take.cont == ((0, Q(-3, 4)),)


def test_empty_parameter_type_yields_no_instances():
    dom = parse_domain("""
        (define (domain d) (:types widget)
          (:durative-action a :parameters (?w - widget)
            :duration (= ?duration 1)
            :condition (and (at start (ok)))
            :effect (and (at end (done ?w)))))""")
    prob = parse_problem("(define (problem p) (:domain d) (:init (ok))"
                         " (:goal (and (ok))))")
    task = ground(dom, prob)
    assert task.actions == []


def test_rovers_navigate_instances_match_typed_enumeration(rovers):
    # oracle: enumerate typed tuples by brute force (self-pairs included)
    rovers_objs = ["r1"]
    waypoints = ["wp1", "wp2", "wp3"]
    expected = {" ".join(("navigate",) + combo)
                for combo in itertools.product(rovers_objs, waypoints, waypoints)}
    actual = {a.name for a in rovers.actions if a.name.startswith("navigate")}
    assert actual == expected
    assert len(actual) == 9
    jr = {a.name for a in rovers.actions if a.name.startswith("journey-recharge")}
    assert len(jr) == 9


def test_grounding_is_deterministic():
    t1 = ground(parse_domain(fixture_text("rovers-domain.pddl")),
                parse_problem(fixture_text("rovers-1rover.pddl")))
    t2 = ground(parse_domain(fixture_text("rovers-domain.pddl")),
                parse_problem(fixture_text("rovers-1rover.pddl")))
    assert [a.name for a in t1.actions] == [a.name for a in t2.actions]
    assert t1.propositions == t2.propositions
    assert t1.fluents == t2.fluents


def test_blowup_guard():
    dom = parse_domain("""
        (define (domain d) (:types thing)
          (:durative-action a :parameters (?x - thing ?y - thing ?z - thing)
            :duration (= ?duration 1)
            :condition (and (at start (ok)))
            :effect (and (at end (done ?x)))))""")
    objs = " ".join(f"o{i}" for i in range(30)) + " - thing"
    prob = parse_problem(f"(define (problem p) (:domain d) (:objects {objs})"
                         "(:init (ok)) (:goal (and (ok))))")
    with pytest.raises(GroundingBlowupError):
        ground(dom, prob, max_ground_actions=1000)


def test_statically_false_actions_pruned():
    dom = parse_domain("""
        (define (domain d)
          (:durative-action reachable :parameters ()
            :duration (= ?duration 1)
            :condition (and (at start (base)))
            :effect (and (at end (goal-fact))))
          (:durative-action unreachable :parameters ()
            :duration (= ?duration 1)
            :condition (and (at start (never)))
            :effect (and (at end (goal-fact)))))""")
    prob = parse_problem("(define (problem p) (:domain d) (:init (base))"
                         " (:goal (and (goal-fact))))")
    task = ground(dom, prob)
    assert [a.name for a in task.actions] == ["reachable"]


def test_undefined_fluent_prunes_referencing_action():
    dom = parse_domain("""
        (define (domain d)
          (:durative-action uses-undefined :parameters ()
            :duration (= ?duration 1)
            :condition (and (at start (>= (ghost) 1)))
            :effect (and (at end (goal-fact))))
          (:durative-action plain :parameters ()
            :duration (= ?duration 1)
            :condition (and (at start (base)))
            :effect (and (at end (goal-fact)))))""")
    prob = parse_problem("(define (problem p) (:domain d) (:init (base))"
                         " (:goal (and (goal-fact))))")
    task = ground(dom, prob)
    assert [a.name for a in task.actions] == ["plain"]


def test_goal_on_undefined_fluent_is_an_error():
    dom = parse_domain("(define (domain d))")
    prob = parse_problem("(define (problem p) (:domain d) (:init)"
                         " (:goal (and (>= (ghost) 1))))")
    with pytest.raises(InputError):
        ground(dom, prob)


@pytest.mark.parametrize("pair", [
    ("borrower-domain.pddl", "borrower-problem.pddl"),
    ("match-domain.pddl", "match-problem.pddl"),
    ("coordination-domain.pddl", "coordination-problem.pddl"),
    ("landing-domain.pddl", "landing-2plane.pddl"),
    ("airport-domain.pddl", "airport-1plane.pddl"),
    ("rovers-domain.pddl", "rovers-1rover.pddl"),
    ("cafe-domain.pddl", "cafe-tea-first.pddl"),
])
def test_everything_is_in_linear_normal_form(pair):
    """Full scan: every numeric condition/effect/duration is an LNF record
    with no zero weights."""
    task = load_task(*pair)

    def check_expr(e: LinearExpr):
        assert isinstance(e, LinearExpr)
        assert all(w != 0 for _f, w in e.weights)

    for a in task.actions:
        for conds in (a.pre_start_num, a.inv_num, a.pre_end_num):
            for c in conds:
                check_expr(c.expr)
        for e in a.dur_eqs:
            check_expr(e)
            assert e.duration_coeff == 0
        for e, _ in list(a.dur_lbs) + list(a.dur_ubs):
            check_expr(e)
        for eff in list(a.num_start) + list(a.num_end):
            check_expr(eff.expr)
        for _f, k in a.cont:
            assert k != 0
    for c in task.goal_num:
        check_expr(c.expr)


def test_til_times_strictly_increase(landing):
    times = [t.time for t in landing.tils]
    assert times == sorted(times)
    assert len(set(times)) == len(times)
