import functools
from pathlib import Path

import pytest

from chronolin.grounding import ground
from chronolin.pddl import parse_domain, parse_problem

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "chronolin" / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


@functools.lru_cache(maxsize=None)
def load_task(domain: str, problem: str):
    dom = parse_domain(fixture_text(domain))
    prob = parse_problem(fixture_text(problem))
    return ground(dom, prob)


@functools.lru_cache(maxsize=None)
def load_task_text(domain_text: str, problem_text: str):
    return ground(parse_domain(domain_text), parse_problem(problem_text))


@pytest.fixture(scope="session")
def borrower():
    return load_task("borrower-domain.pddl", "borrower-problem.pddl")


@pytest.fixture(scope="session")
def match():
    return load_task("match-domain.pddl", "match-problem.pddl")


@pytest.fixture(scope="session")
def coordination():
    return load_task("coordination-domain.pddl", "coordination-problem.pddl")


@pytest.fixture(scope="session")
def landing():
    return load_task("landing-domain.pddl", "landing-2plane.pddl")


@pytest.fixture(scope="session")
def airport():
    return load_task("airport-domain.pddl", "airport-1plane.pddl")


@pytest.fixture(scope="session")
def rovers():
    return load_task("rovers-domain.pddl", "rovers-1rover.pddl")


@pytest.fixture(scope="session")
def cafe_tea():
    return load_task("cafe-domain.pddl", "cafe-tea-first.pddl")


@pytest.fixture(scope="session")
def cafe_toast():
    return load_task("cafe-domain.pddl", "cafe-toast-first.pddl")
