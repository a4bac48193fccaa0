"""Interleaved execution of several programs over one shared memory.

``System`` owns the global state and one driver per process; schedulers
(scenario replay, fuzzing, exploration, the adversaries) decide who moves.
Stepping a process that rests in its remainder section delivers the
begin-entry signal first, so a schedule is fully described by the sequence
of actors.
"""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Optional

from .errors import InvalidEventError
from .framework import ProcessDriver, ProcessProgram
from .model import (
    Event,
    GlobalState,
    MemoryState,
    Run,
    Section,
    apply_event,
    new_memory,
)
from .naming import NamingAssignment
from .values import ProcessId, token_of


class System:
    """Shared memory plus one driver per process."""

    def __init__(
        self,
        programs: Mapping[ProcessId, ProcessProgram],
        m: int,
        assignments: Mapping[ProcessId, NamingAssignment],
        memory: Optional[MemoryState] = None,
        locals_map: Optional[Mapping[ProcessId, object]] = None,
    ):
        if not programs:
            raise InvalidEventError("a system needs at least one process")
        for pid, naming in assignments.items():
            if naming.m != m:
                raise InvalidEventError(f"assignment for {pid!r} has wrong size")
        self.m = m
        self.programs = dict(programs)
        self.drivers: Dict[ProcessId, ProcessDriver] = {}
        memory = memory if memory is not None else new_memory(m)
        locals_map = dict(locals_map or {})
        sections = {}
        for pid, program in programs.items():
            driver = ProcessDriver(program, pid, assignments[pid], locals_map.get(pid))
            self.drivers[pid] = driver
            locals_map[pid] = driver.local
            sections[pid] = Section.REMAINDER
        self.state = GlobalState(memory, locals_map, sections)
        self._initial = self.state
        self._assignments = dict(assignments)
        self._events = []

    @property
    def pids(self):
        return sorted(self.drivers, key=token_of)

    def initial_state(self) -> GlobalState:
        return self._initial

    def section_of(self, pid: ProcessId) -> Section:
        return self.state.section_of(pid)

    def peek(self, pid: ProcessId) -> Event:
        """The event the process would perform next (begins entry if resting)."""
        driver = self.drivers[pid]
        if driver.in_remainder():
            driver.begin_entry()
        return driver.make_event(self.state.memory)

    def step(self, pid: ProcessId) -> Event:
        """Execute one event by the given process and record it."""
        driver = self.drivers[pid]
        if driver.in_remainder():
            driver.begin_entry()
        event = driver.make_event(self.state.memory)
        self.state = apply_event(self.state, event)
        driver.observe(event)
        self.state = self.state.with_local(pid, driver.local)
        self._events.append(event)
        return event

    def run_so_far(self) -> Run:
        return Run(self._initial, tuple(self._events), self._assignments)

    def cs_occupants(self):
        return [p for p in self.pids if self.section_of(p) is Section.CS]

    def is_quiescent(self) -> bool:
        return self.state.is_quiescent()

    def state_key(self):
        return self.state.key()


def replay_choices(
    programs: Mapping[ProcessId, ProcessProgram],
    m: int,
    assignments: Mapping[ProcessId, NamingAssignment],
    actors: Iterable[ProcessId],
) -> System:
    """Re-execute a schedule given as a sequence of actors."""
    system = System(programs, m, assignments)
    for pid in actors:
        system.step(pid)
    return system
