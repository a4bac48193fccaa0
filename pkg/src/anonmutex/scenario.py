"""Scenario files: scripted interleavings with step-by-step assertions.

A scenario is plain text, one directive per line::

    m 7                     register count
    allow-invalid-m         permit sizes the standard program rejects
    proc i fig1             declare a process and its program
    assign i identity       naming: identity | reverse | explicit table
    until i write 3         run i until its next event matches; do not execute it
    step i write 3          execute one event by i and check kind (and register)
    run i 40                execute exactly 40 events by i, no assertions
    expect mutex-violated   final expectations (several allowed)

Register indices in directives are physical.  ``expect`` accepts
``mutex-violated``, ``no-violation``, ``waiting-count <n>``, and
``section <proc> <remainder|entry|cs|exit>``.  The schedule must match
step by step; the first divergence fails the scenario with its position.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .errors import ScenarioError
from .fig1 import build_named
from .model import Event, EventKind, Run, Section
from .naming import NamingAssignment
from .sim import System
from .values import ProcessId, token_of

UNTIL_CAP = 100_000

_KINDS = {k.value: k for k in EventKind}
_SECTIONS = {s.value: s for s in Section}


@dataclass
class Scenario:
    """Parsed scenario: processes, namings, schedule, expectations."""

    name: str
    m: int
    allow_invalid_m: bool
    programs: Dict[str, str]              # process name -> program name
    assignments: Dict[str, NamingAssignment]
    directives: List[tuple]
    expectations: List[tuple]


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    m = None
    allow_invalid = False
    programs: Dict[str, str] = {}
    assignments: Dict[str, NamingAssignment] = {}
    directives: List[tuple] = []
    expectations: List[tuple] = []

    def fail(lineno, msg):
        raise ScenarioError(f"{name}:{lineno}: {msg}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        if head == "m":
            m = int(parts[1])
        elif head == "allow-invalid-m":
            allow_invalid = True
        elif head == "proc":
            programs[parts[1]] = parts[2]
        elif head == "assign":
            if m is None:
                fail(lineno, "assign before register count")
            if parts[2] == "identity":
                assignments[parts[1]] = NamingAssignment.identity(m)
            elif parts[2] == "reverse":
                assignments[parts[1]] = NamingAssignment.reverse(m)
            else:
                assignments[parts[1]] = NamingAssignment(int(x) for x in parts[2:])
        elif head in ("until", "step"):
            if len(parts) < 3 or parts[2] not in _KINDS:
                fail(lineno, f"bad directive: {line!r}")
            reg = int(parts[3]) if len(parts) > 3 else None
            directives.append((head, parts[1], _KINDS[parts[2]], reg, lineno))
        elif head == "run":
            directives.append(("run", parts[1], None, int(parts[2]), lineno))
        elif head == "expect":
            if parts[1] == "mutex-violated":
                expectations.append(("mutex-violated",))
            elif parts[1] == "no-violation":
                expectations.append(("no-violation",))
            elif parts[1] == "waiting-count":
                expectations.append(("waiting-count", int(parts[2])))
            elif parts[1] == "section":
                expectations.append(("section", parts[2], _SECTIONS[parts[3]]))
            else:
                fail(lineno, f"unknown expectation {parts[1]!r}")
        else:
            fail(lineno, f"unknown directive {head!r}")
    if m is None:
        raise ScenarioError(f"{name}: missing register count")
    if not programs:
        raise ScenarioError(f"{name}: no processes declared")
    for proc in programs:
        if proc not in assignments:
            raise ScenarioError(f"{name}: process {proc!r} has no naming assignment")
    return Scenario(name, m, allow_invalid, programs, assignments, directives, expectations)


@dataclass
class ScenarioResult:
    """Outcome of replaying a scenario."""

    scenario: Scenario
    run: Run
    mutex_violated: bool
    steps_executed: int
    expectations_ok: bool
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.expectations_ok


def _match(event: Event, kind: EventKind, reg: Optional[int]) -> bool:
    if event.kind is not kind:
        return False
    return reg is None or event.physical == reg


def run_scenario(scenario: Scenario) -> ScenarioResult:
    """Replay the schedule, checking each directive; then judge expectations."""
    pids = {}
    progs = {}
    assigns = {}
    for idx, (proc, prog_name) in enumerate(scenario.programs.items(), start=1):
        pid = ProcessId(idx)
        pids[proc] = pid
        progs[pid] = build_named(prog_name, scenario.m, scenario.allow_invalid_m)
        assigns[pid] = scenario.assignments[proc]
    system = System(progs, scenario.m, assigns)
    ever_two_in_cs = False
    steps = 0

    def note_state():
        nonlocal ever_two_in_cs
        if len(system.cs_occupants()) >= 2:
            ever_two_in_cs = True

    for directive in scenario.directives:
        op, proc, kind, arg, lineno = directive
        if proc not in pids:
            raise ScenarioError(f"{scenario.name}:{lineno}: unknown process {proc!r}")
        pid = pids[proc]
        if op == "step":
            event = system.peek(pid)
            if not _match(event, kind, arg):
                raise ScenarioError(
                    f"{scenario.name}:{lineno}: step {steps}: expected {proc} "
                    f"{kind.value}{'' if arg is None else ' r%d' % arg}, "
                    f"next event is {event!r}",
                    step_index=steps,
                )
            system.step(pid)
            steps += 1
            note_state()
        elif op == "until":
            for _ in range(UNTIL_CAP):
                event = system.peek(pid)
                if _match(event, kind, arg):
                    break
                system.step(pid)
                steps += 1
                note_state()
            else:
                raise ScenarioError(
                    f"{scenario.name}:{lineno}: {proc} never reached "
                    f"{kind.value}{'' if arg is None else ' r%d' % arg} "
                    f"within {UNTIL_CAP} steps",
                    step_index=steps,
                )
        else:  # run
            for _ in range(arg):
                system.step(pid)
                steps += 1
                note_state()

    failures = []
    for exp in scenario.expectations:
        if exp[0] == "mutex-violated" and not ever_two_in_cs:
            failures.append("expected a mutual exclusion violation; none occurred")
        elif exp[0] == "no-violation" and ever_two_in_cs:
            failures.append("expected no violation; two processes shared the CS")
        elif exp[0] == "waiting-count":
            got = system.state.memory.count(lambda v: v.is_waiting)
            if got != exp[1]:
                failures.append(f"expected {exp[1]} waiting register(s), found {got}")
        elif exp[0] == "section":
            got = system.section_of(pids[exp[1]])
            if got is not exp[2]:
                failures.append(
                    f"expected {exp[1]} in section {exp[2].value}, found {got.value}"
                )
    return ScenarioResult(
        scenario=scenario,
        run=system.run_so_far(),
        mutex_violated=ever_two_in_cs,
        steps_executed=steps,
        expectations_ok=not failures,
        failures=failures,
    )


def scenario_text_from_run(
    run: Run,
    program_names: Dict[ProcessId, str],
    m: int,
    allow_invalid_m: bool,
    expectations: List[str],
    title: str = "emitted witness",
) -> str:
    """Serialize a concrete run as a replayable scenario file."""
    lines = [f"# {title}", f"m {m}"]
    if allow_invalid_m:
        lines.append("allow-invalid-m")
    names = {pid: f"p{token_of(pid)}" for pid in sorted(program_names, key=token_of)}
    for pid in sorted(program_names, key=token_of):
        lines.append(f"proc {names[pid]} {program_names[pid]}")
    for pid in sorted(program_names, key=token_of):
        table = " ".join(str(x) for x in run.naming_of(pid).table)
        lines.append(f"assign {names[pid]} {table}")
    for event in run.events:
        if event.is_memory_access:
            lines.append(f"step {names[event.actor]} {event.kind.value} {event.physical}")
        else:
            lines.append(f"step {names[event.actor]} {event.kind.value}")
    lines.extend(f"expect {e}" for e in expectations)
    return "\n".join(lines) + "\n"
