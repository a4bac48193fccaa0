"""Line-oriented text serialization for runs.

Header lines carry the register count and the naming assignment tables;
each event is one tab-separated line: step index, actor id, event kind,
logical index, physical index, value token.  Section events use ``-`` for
the register fields.  This format is the interchange between the checker,
the adversaries, and the command line.
"""

from __future__ import annotations

from typing import List

from .errors import InvalidEventError
from .model import Event, EventKind, GlobalState, MemoryState, Run, Section, new_memory
from .naming import NamingAssignment
from .values import ProcessId, parse_value, token_of

FORMAT_TAG = "anonmutex-run v1"


def run_to_text(run: Run) -> str:
    lines: List[str] = [f"# {FORMAT_TAG}", f"m {run.m}"]
    for pid in sorted(run.assignments, key=token_of):
        table = " ".join(str(x) for x in run.assignments[pid].table)
        lines.append(f"assign {token_of(pid)} {table}")
    if any(not v.is_free for v in run.initial.memory.values):
        lines.append("init " + " ".join(v.token() for v in run.initial.memory.values))
    lines.append(f"events {len(run.events)}")
    for i, e in enumerate(run.events):
        if e.is_memory_access:
            lines.append(
                f"{i}\t{token_of(e.actor)}\t{e.kind.value}\t{e.logical}\t{e.physical}"
                f"\t{e.value.token()}"
            )
        else:
            lines.append(f"{i}\t{token_of(e.actor)}\t{e.kind.value}\t-\t-\t-")
    return "\n".join(lines) + "\n"


def run_from_text(text: str) -> Run:
    """Parse a serialized run (memory level: locals are not carried)."""
    m = None
    assignments = {}
    init_values = None
    events = []
    declared = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "m":
            m = int(parts[1])
        elif parts[0] == "assign":
            pid = ProcessId(int(parts[1]))
            assignments[pid] = NamingAssignment(int(x) for x in parts[2:])
        elif parts[0] == "init":
            init_values = [parse_value(tok) for tok in parts[1:]]
        elif parts[0] == "events":
            declared = int(parts[1])
        else:
            fields = raw.split("\t")
            if len(fields) != 6:
                raise InvalidEventError(f"malformed event line: {raw!r}")
            _, actor, kind, logical, physical, value = fields
            pid = ProcessId(int(actor))
            ek = EventKind(kind)
            if ek in (EventKind.READ, EventKind.WRITE):
                events.append(
                    Event(pid, ek, int(logical), int(physical), parse_value(value.strip()))
                )
            else:
                events.append(Event(pid, ek))
    if m is None:
        raise InvalidEventError("run text is missing the register count header")
    if declared is not None and declared != len(events):
        raise InvalidEventError(f"header declared {declared} events, found {len(events)}")
    memory = MemoryState(init_values) if init_values else new_memory(m)
    sections = {pid: Section.REMAINDER for pid in assignments}
    initial = GlobalState(memory, {}, sections)
    return Run(initial, tuple(events), assignments)
