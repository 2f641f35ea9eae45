"""The external solution artifact: a time-stamped action sequence."""

from __future__ import annotations

import re
from dataclasses import dataclass


@dataclass(frozen=True)
class PlanEntry:
    time: float
    action: str            # ground action name, e.g. "takemortgage longmortgage"
    duration: float


@dataclass
class TimedPlan:
    entries: list[PlanEntry]

    @property
    def makespan(self) -> float:
        if not self.entries:
            return 0.0
        return max(e.time + e.duration for e in self.entries)

    def to_text(self, header: str = "") -> str:
        lines = [f"; {line}" for line in header.splitlines() if line]
        for e in sorted(self.entries, key=lambda x: (x.time, x.action)):
            lines.append(f"{e.time:.6f}: ({e.action})  [{e.duration:.6f}]")
        return "\n".join(lines) + "\n"


_LINE_RE = re.compile(
    r"^\s*(?P<t>[-+0-9.eE]+)\s*:\s*\((?P<a>[^)]*)\)\s*\[\s*(?P<d>[-+0-9.eE]+)\s*\]\s*$")


class PlanParseError(Exception):
    pass


def parse_plan(text: str) -> TimedPlan:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";")[0].strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if not m:
            raise PlanParseError(f"malformed plan line {lineno}: {raw!r}")
        entries.append(PlanEntry(float(m.group("t")),
                                 " ".join(m.group("a").split()).lower(),
                                 float(m.group("d"))))
    entries.sort(key=lambda e: (e.time, e.action))
    return TimedPlan(entries)
