"""Command-line entry point: solve PDDL tasks or validate plan files.

Exit codes: 0 solved (or plan valid), 1 unsolvable proven (or plan
invalid), 2 resource limit (or structural plan error), 3 input error,
4 internal self-validation failure.  Diagnostics go to stderr; the plan
goes to the output file or stdout.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction

from . import posthoc, rpg, search, validator
from .grounding import ground, GroundingBlowupError, TypeMismatchError
from .lnf import NonlinearError, Q
from .lp import dump as lp_dump
from .pddl import (InputError, PddlSyntaxError, UnsupportedConstructError,
                   parse_domain, parse_problem)
from .plans import PlanParseError, parse_plan
from .scheduler import build_lp
from .search import SearchConfig
from .state import initial_state

ENV_PREFIX = "CHRONOLIN_"


def _env_default(name: str, fallback):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), fallback)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="chronolin",
        description="Forward-chaining temporal-numeric planner "
                    "(LP-checked states, relaxed-plan heuristics).")
    ap.add_argument("--domain", help="PDDL domain file")
    ap.add_argument("--problem", help="PDDL problem file")
    ap.add_argument("--epsilon", type=str,
                    default=_env_default("epsilon", "0.001"),
                    help="minimum separation between happenings (default 0.001)")
    ap.add_argument("--heuristic", choices=["basic", "refined"],
                    default=_env_default("heuristic", "refined"))
    ap.add_argument("--search",
                    choices=["ehc", "wastar", "optimal", "ehc-wastar"],
                    default=_env_default("search", "ehc-wastar"))
    ap.add_argument("--posthoc", action="store_true",
                    default=_env_default("posthoc", "") == "1",
                    help="reschedule the final plan against the task metric")
    ap.add_argument("--validate", metavar="PLAN",
                    help="validate an existing plan file instead of solving")
    ap.add_argument("--output", help="plan output file (default stdout)")
    ap.add_argument("--time-limit", type=float,
                    default=float(_env_default("time_limit", "0") or 0) or None)
    ap.add_argument("--memory-limit", type=float, default=None,
                    help="memory budget in MB")
    ap.add_argument("--max-states", type=int,
                    default=int(_env_default("max_states", "0") or 0) or None)
    ap.add_argument("--milp-nodes", type=int, default=100000)
    ap.add_argument("--force-compression", action="store_true",
                    help="treat every action as compression-safe (control runs)")
    ap.add_argument("--dump-lp", action="store_true",
                    help="dump the final plan's LP to stderr")
    ap.add_argument("--trace-trpg", action="store_true",
                    help="emit the initial state's relaxed-graph layer trace")
    ap.add_argument("--quiet", action="store_true")
    return ap


def _load_task(args):
    with open(args.domain, encoding="utf-8") as fh:
        dom = parse_domain(fh.read())
    with open(args.problem, encoding="utf-8") as fh:
        prob = parse_problem(fh.read())
    return ground(dom, prob)


def _trace_trpg(task, cfg):
    state = initial_state(task)
    graph = rpg.build_trpg(state, cfg.heuristic, cfg.eps)
    print(f"; TRPG trace ({cfg.heuristic}), dead={graph.dead}", file=sys.stderr)
    shown: set[int] = set()
    for layer in graph.layers:
        new = sorted(layer.members - shown)
        shown |= layer.members
        names = [f"{task.snaps[s].name}.{task.snaps[s].kind}" for s in new]
        vmin, vmax = graph.bounds_at.get(layer.time, ({}, {}))
        bounds = " ".join(f"{task.fluents[f]}=[{vmin[f]:g},{vmax[f]:g}]"
                          for f in sorted(vmin))
        print(f"; al({layer.time:.3f}): +{names} {bounds}", file=sys.stderr)
    if graph.goal_time is not None:
        print(f"; goals reached at fl({graph.goal_time:.3f})", file=sys.stderr)


def run(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        eps = Q(args.epsilon)
        if eps <= 0:
            raise InputError("epsilon must be positive")
    except (ValueError, ZeroDivisionError):
        print(f"bad epsilon {args.epsilon!r}", file=sys.stderr)
        return 3
    if not args.domain or not args.problem:
        print("--domain and --problem are required", file=sys.stderr)
        return 3
    try:
        task = _load_task(args)
    except (PddlSyntaxError, UnsupportedConstructError, InputError,
            TypeMismatchError, GroundingBlowupError, NonlinearError,
            OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3

    if args.validate:
        return _validate_mode(task, args, eps)

    cfg = SearchConfig(eps=eps, heuristic=args.heuristic,
                       force_compression=args.force_compression,
                       time_limit=args.time_limit,
                       max_states=args.max_states,
                       memory_limit_mb=args.memory_limit,
                       progress=not args.quiet)
    if args.trace_trpg:
        _trace_trpg(task, cfg)
    res = search.solve(task, cfg, mode=args.search)
    if res.status == "unsolvable":
        print("unsolvable", file=sys.stderr)
        return 1
    if res.status == "resource":
        print("resource limit exceeded", file=sys.stderr)
        return 2

    plan = res.plan
    makespan = res.makespan
    if args.posthoc:
        ph = posthoc.optimize_plan(res.state, res.schedule, eps,
                                   node_limit=args.milp_nodes)
        delta = ph.original_metric - ph.metric
        print(f"posthoc: metric {ph.original_metric:.6f} -> {ph.metric:.6f} "
              f"(delta {delta:+.6f}, {ph.status})", file=sys.stderr)
        plan = ph.plan
        makespan = plan.makespan
    if args.dump_lp:
        sched = build_lp(res.state, eps, goal_rows=True)
        print(lp_dump(sched.model), file=sys.stderr)

    report = validator.validate(task, plan, float(eps))
    if not report.ok:
        print("internal error: produced plan fails self-validation:",
              file=sys.stderr)
        for v in report.violations:
            print(f"  {v}", file=sys.stderr)
        return 4
    header = (f"domain: {os.path.basename(args.domain)}\n"
              f"problem: {os.path.basename(args.problem)}\n"
              f"makespan: {report.makespan:.6f}\n"
              f"metric: {report.metric:.6f}")
    text = plan.to_text(header)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"solved: makespan={report.makespan:.6f} metric={report.metric:.6f} "
          f"states={res.states_evaluated}", file=sys.stderr)
    return 0


def _validate_mode(task, args, eps) -> int:
    try:
        with open(args.validate, encoding="utf-8") as fh:
            plan = parse_plan(fh.read())
    except (PlanParseError, OSError) as exc:
        print(f"structural error: {exc}", file=sys.stderr)
        return 2
    report = validator.validate(task, plan, float(eps))
    if any(v.kind == "structural" for v in report.violations):
        for v in report.violations:
            print(str(v), file=sys.stderr)
        return 2
    if not report.ok:
        for v in report.violations:
            print(str(v), file=sys.stderr)
        print(f"invalid: {len(report.violations)} violation(s)", file=sys.stderr)
        return 1
    print(f"valid: makespan={report.makespan:.6f} metric={report.metric:.6f}",
          file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
