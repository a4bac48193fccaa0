"""Deterministic process programs and the machinery that drives them.

A program is a pure step machine: given a local state it names its next
action, and given the observation that completes that action it produces the
next local state.  Programs may compare identifiers for equality only; the
relabeling test in this module is the executable form of that constraint.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import enum

from .errors import InvalidEventError, ProtocolError
from .model import (
    Event,
    EventKind,
    GlobalState,
    MemoryState,
    Run,
    Section,
    apply_event,
)
from .naming import NamingAssignment
from .values import ProcessId, RegisterValue, owned


class ActionKind(enum.Enum):
    READ_REG = "read"
    WRITE_REG = "write"
    ENTER_CS = "enter-cs"
    EXIT_CS = "exit-cs"
    ENTER_REMAINDER = "enter-remainder"
    STAY_REMAINDER = "stay-remainder"


@dataclass(frozen=True)
class Action:
    """What a process wants to do next."""

    kind: ActionKind
    logical: Optional[int] = None
    value: Optional[RegisterValue] = None

    def __post_init__(self):
        if self.kind is ActionKind.READ_REG and self.logical is None:
            raise InvalidEventError("read action needs a logical index")
        if self.kind is ActionKind.WRITE_REG and (self.logical is None or self.value is None):
            raise InvalidEventError("write action needs index and value")


class ProcessProgram(abc.ABC):
    """A symmetric, deterministic step machine with equality-only identifiers."""

    name = "program"

    @abc.abstractmethod
    def initial_local(self, pid: ProcessId, m: int):
        """Local state of a process resting in its remainder section."""

    @abc.abstractmethod
    def begin_entry(self, local):
        """Local state after the scheduler signals the process to compete."""

    @abc.abstractmethod
    def next_action(self, local) -> Action:
        """The unique next action from this local state."""

    @abc.abstractmethod
    def advance(self, local, observed: Optional[RegisterValue]):
        """Complete the pending action (reads pass the observed value)."""


def step(program: ProcessProgram, local, read_result: Optional[RegisterValue] = None):
    """Complete the pending action and return (new local, next pending action).

    ``read_result`` must be present exactly when the pending action is a
    read; anything else is a protocol error.
    """
    pending = program.next_action(local)
    if pending.kind is ActionKind.READ_REG:
        if read_result is None:
            raise ProtocolError("pending read completed without a read result")
    elif read_result is not None:
        raise ProtocolError(f"read result supplied to a {pending.kind.value} action")
    new_local = program.advance(local, read_result)
    return new_local, program.next_action(new_local)


class ProcessDriver:
    """One process's program, identity, naming, and current local state."""

    __slots__ = ("program", "pid", "naming", "local")

    def __init__(self, program: ProcessProgram, pid: ProcessId, naming: NamingAssignment,
                 local=None):
        self.program = program
        self.pid = pid
        self.naming = naming
        self.local = local if local is not None else program.initial_local(pid, naming.m)

    def pending(self) -> Action:
        return self.program.next_action(self.local)

    def in_remainder(self) -> bool:
        return self.pending().kind is ActionKind.STAY_REMAINDER

    def begin_entry(self):
        if not self.in_remainder():
            raise ProtocolError(f"{self.pid!r} is not in its remainder section")
        self.local = self.program.begin_entry(self.local)

    def make_event(self, memory: MemoryState) -> Event:
        """Materialize the pending action against the given memory."""
        action = self.pending()
        if action.kind is ActionKind.READ_REG:
            physical = self.naming.physical(action.logical)
            return Event(self.pid, EventKind.READ, action.logical, physical,
                         memory.value_at(physical))
        if action.kind is ActionKind.WRITE_REG:
            physical = self.naming.physical(action.logical)
            return Event(self.pid, EventKind.WRITE, action.logical, physical, action.value)
        if action.kind is ActionKind.STAY_REMAINDER:
            raise ProtocolError(f"{self.pid!r} has no pending event while in remainder")
        return Event(self.pid, EventKind(action.kind.value))

    def observe(self, event: Event):
        """Advance the local state past the event just applied."""
        observed = event.value if event.kind is EventKind.READ else None
        self.local = self.program.advance(self.local, observed)

    def fork(self) -> "ProcessDriver":
        return ProcessDriver(self.program, self.pid, self.naming, self.local)


@dataclass
class SoloResult:
    """Outcome of driving a single process from its remainder section."""

    run: Run
    completed: bool
    steps: int
    reason: str = ""


def run_solo(
    program: ProcessProgram,
    pid: ProcessId,
    memory: MemoryState,
    naming: NamingAssignment,
    step_cap: int,
    stop_after_cs_entry: bool = False,
) -> SoloResult:
    """Drive one process through a full passage (or until the cap).

    The process begins its entry section immediately and runs alone until it
    re-enters its remainder, optionally stopping right after it enters its
    critical section.  Running out of budget is reported, not raised; an
    adversary freezing a process mid-entry is a legitimate outcome.
    """
    if step_cap < 1:
        raise InvalidEventError("step cap must be positive")
    driver = ProcessDriver(program, pid, naming)
    initial = GlobalState(memory, {pid: driver.local}, {pid: Section.REMAINDER})
    run = Run(initial, (), {pid: naming})
    state = initial
    driver.begin_entry()
    events = []
    for n in range(step_cap):
        event = driver.make_event(state.memory)
        state = apply_event(state, event)
        driver.observe(event)
        events.append(event)
        if event.kind is EventKind.ENTER_REMAINDER:
            return SoloResult(run.extended(events), True, n + 1)
        if stop_after_cs_entry and event.kind is EventKind.ENTER_CS:
            return SoloResult(run.extended(events), True, n + 1, "stopped at cs entry")
    return SoloResult(run.extended(events), False, step_cap, "step cap exhausted")


def relabel_ids(run: Run, bijection: Mapping[ProcessId, ProcessId]) -> Run:
    """Rewrite every identifier occurrence in a run through a bijection.

    Covers event actors, owned register values, assignment keys, and the
    identifiers inside the initial state.  For a symmetric program the result
    replays exactly like the original; the tests rely on that.
    """
    actors = {e.actor for e in run.events} | set(run.assignments)
    missing = [p for p in actors if p not in bijection]
    if missing:
        raise InvalidEventError(f"bijection does not cover {sorted(map(repr, missing))}")
    if len(set(bijection.values())) != len(bijection):
        raise InvalidEventError("relabeling map is not injective")

    def map_value(v):
        if isinstance(v, RegisterValue) and v.is_owned and v.owner in bijection:
            return owned(bijection[v.owner])
        return v

    events = tuple(
        Event(bijection[e.actor], e.kind, e.logical, e.physical, map_value(e.value))
        for e in run.events
    )
    memory = MemoryState([map_value(v) for v in run.initial.memory.values])
    locals_map = {}
    for pid, local in run.initial.locals.items():
        new_pid = bijection.get(pid, pid)
        relabel = getattr(local, "relabel", None)
        locals_map[new_pid] = relabel(bijection) if callable(relabel) else local
    sections = {bijection.get(pid, pid): s for pid, s in run.initial.sections.items()}
    assignments = {bijection[pid]: naming for pid, naming in run.assignments.items()}
    return Run(GlobalState(memory, locals_map, sections), events, assignments)


def replay_with_programs(run: Run, programs: Mapping[ProcessId, ProcessProgram]) -> GlobalState:
    """Replay a run checking every event against the actors' programs.

    Verifies determinism: each recorded event must be exactly the event the
    actor's program produces at that point.  Returns the final global state
    including locals.
    """
    drivers: Dict[ProcessId, ProcessDriver] = {}
    state = run.initial
    for pid, program in programs.items():
        local = run.initial.locals.get(pid)
        drivers[pid] = ProcessDriver(program, pid, run.naming_of(pid), local)
        if local is None:
            state = state.with_local(pid, drivers[pid].local)
        if pid not in state.sections:
            state = state.with_section(pid, Section.REMAINDER)
    for i, recorded in enumerate(run.events):
        driver = drivers.get(recorded.actor)
        if driver is None:
            raise InvalidEventError(f"event {i} by {recorded.actor!r} has no program")
        if driver.in_remainder():
            driver.begin_entry()
        produced = driver.make_event(state.memory)
        if produced != recorded:
            raise ProtocolError(
                f"event {i}: program would produce {produced!r}, run recorded {recorded!r}"
            )
        state = apply_event(state, recorded)
        driver.observe(recorded)
        state = state.with_local(recorded.actor, driver.local)
    return state
