"""chronolin: a forward-chaining temporal-numeric planner.

Durative actions with linear continuous effects and duration-dependent
effects are planned by forward search over snap actions; joint
temporal-numeric consistency of each plan prefix is checked with a linear
program (or a simple temporal network when no fluent is time-dependent).
Guidance comes from temporal relaxed-planning-graph heuristics, and a
final mixed-integer pass can reschedule the plan against the task metric.
"""

__version__ = "0.1.0"
