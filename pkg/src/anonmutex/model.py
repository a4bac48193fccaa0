"""Shared-memory execution model: memory, events, global states, and runs.

A run is an initial global state plus a sequence of events.  Everything at
this layer is a plain immutable value; replay is a pure function, and any
mismatch between a recorded read and the replayed memory is an error rather
than a silent repair.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import ConfigError, InvalidEventError, ReplayDivergenceError
from .naming import NamingAssignment
from .values import FREE, ProcessId, RegisterValue, token_of


class Section(enum.Enum):
    REMAINDER = "remainder"
    ENTRY = "entry"
    CS = "cs"
    EXIT = "exit"


class EventKind(enum.Enum):
    READ = "read"
    WRITE = "write"
    ENTER_CS = "enter-cs"
    EXIT_CS = "exit-cs"
    ENTER_REMAINDER = "enter-remainder"


#: Event kinds that touch no register; they exist so that section membership
#: is derivable from the run alone.
SECTION_EVENT_KINDS = frozenset(
    {EventKind.ENTER_CS, EventKind.EXIT_CS, EventKind.ENTER_REMAINDER}
)


class MemoryState:
    """m anonymous registers, addressed by physical index 1..m."""

    __slots__ = ("_values",)

    def __init__(self, values: Iterable[RegisterValue]):
        values = tuple(values)
        if len(values) < 1:
            raise ConfigError("register count must be at least 1")
        object.__setattr__(self, "_values", values)

    def __setattr__(self, name, value):
        raise AttributeError("MemoryState is immutable")

    @property
    def m(self) -> int:
        return len(self._values)

    @property
    def values(self) -> tuple:
        return self._values

    def value_at(self, physical: int) -> RegisterValue:
        self._check_index(physical)
        return self._values[physical - 1]

    def with_write(self, physical: int, value: RegisterValue) -> "MemoryState":
        self._check_index(physical)
        vals = list(self._values)
        vals[physical - 1] = value
        return MemoryState(vals)

    def count(self, predicate) -> int:
        return sum(1 for v in self._values if predicate(v))

    def _check_index(self, physical: int):
        if not 1 <= physical <= len(self._values):
            raise InvalidEventError(
                f"physical index {physical} out of 1..{len(self._values)}"
            )

    def __eq__(self, other):
        return isinstance(other, MemoryState) and other._values == self._values

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(self._values)

    def __repr__(self):
        return f"MemoryState([{', '.join(v.token() for v in self._values)}])"


def new_memory(m: int) -> MemoryState:
    """Fresh memory of m registers, all free (uniform initialization)."""
    if m < 1:
        raise ConfigError("register count must be at least 1")
    return MemoryState([FREE] * m)


@dataclass(frozen=True)
class Event:
    """One atomic step by one process.

    Reads and writes carry both the logical index the program used and the
    physical index its naming assignment resolved to, plus the value read or
    written.  Section-change events carry neither.
    """

    actor: ProcessId
    kind: EventKind
    logical: Optional[int] = None
    physical: Optional[int] = None
    value: Optional[RegisterValue] = None

    def __post_init__(self):
        if self.kind in (EventKind.READ, EventKind.WRITE):
            if self.logical is None or self.physical is None or self.value is None:
                raise InvalidEventError(f"{self.kind.value} event needs index and value")
        else:
            if self.logical is not None or self.physical is not None or self.value is not None:
                raise InvalidEventError(f"{self.kind.value} event must not carry register data")

    @property
    def is_memory_access(self) -> bool:
        return self.kind in (EventKind.READ, EventKind.WRITE)

    def __repr__(self):
        if self.is_memory_access:
            return (f"{self.actor!r}:{self.kind.value}"
                    f"(l{self.logical}->r{self.physical}={self.value.token()})")
        return f"{self.actor!r}:{self.kind.value}"


@dataclass(frozen=True)
class GlobalState:
    """Memory plus each process's local state and section."""

    memory: MemoryState
    locals: Mapping[ProcessId, object] = field(default_factory=dict)
    sections: Mapping[ProcessId, Section] = field(default_factory=dict)

    def section_of(self, pid: ProcessId) -> Section:
        return self.sections.get(pid, Section.REMAINDER)

    def is_quiescent(self) -> bool:
        return all(s is Section.REMAINDER for s in self.sections.values())

    def with_memory(self, memory: MemoryState) -> "GlobalState":
        return GlobalState(memory, self.locals, self.sections)

    def with_section(self, pid: ProcessId, section: Section) -> "GlobalState":
        sections = dict(self.sections)
        sections[pid] = section
        return GlobalState(self.memory, self.locals, sections)

    def with_local(self, pid: ProcessId, local) -> "GlobalState":
        locs = dict(self.locals)
        locs[pid] = local
        return GlobalState(self.memory, locs, self.sections)

    def __eq__(self, other):
        return (
            isinstance(other, GlobalState)
            and other.memory == self.memory
            and dict(other.locals) == dict(self.locals)
            and dict(other.sections) == dict(self.sections)
        )

    def __ne__(self, other):
        return not self.__eq__(other)

    __hash__ = None  # mutable-mapping fields; use key() where hashing is needed

    def key(self):
        """Hashable componentwise key (register values, locals, sections)."""
        pids = sorted(set(self.sections) | set(self.locals), key=token_of)
        return (
            self.memory.values,
            tuple(
                (token_of(p), _local_key(self.locals.get(p)), self.section_of(p).value)
                for p in pids
            ),
        )


def _local_key(local):
    if local is None:
        return None
    keyer = getattr(local, "key", None)
    return keyer() if callable(keyer) else local


_SECTION_TRANSITIONS = {
    EventKind.ENTER_CS: (Section.ENTRY, Section.CS),
    EventKind.EXIT_CS: (Section.CS, Section.EXIT),
    EventKind.ENTER_REMAINDER: (Section.EXIT, Section.REMAINDER),
}


def apply_event(state: GlobalState, event: Event) -> GlobalState:
    """Apply one event to a global state.

    Writes update exactly one register, reads update nothing in memory, and
    section-change events update only the actor's section.  Locals are not
    touched here; they belong to the program layer.  A read whose recorded
    value disagrees with the register's content raises
    :class:`ReplayDivergenceError`.
    """
    section = state.section_of(event.actor)
    if event.kind is EventKind.READ:
        actual = state.memory.value_at(event.physical)
        if actual != event.value:
            raise ReplayDivergenceError(
                f"{event!r}: register {event.physical} holds {actual.token()}, "
                f"event recorded {event.value.token()}"
            )
        new_state = state
    elif event.kind is EventKind.WRITE:
        new_state = state.with_memory(state.memory.with_write(event.physical, event.value))
    else:
        want, become = _SECTION_TRANSITIONS[event.kind]
        if section is not want:
            raise InvalidEventError(f"{event!r} not allowed from section {section.value}")
        return state.with_section(event.actor, become)
    # A memory access by a process resting in its remainder begins its entry
    # section; this is how runs encode the scheduler's begin-entry signal.
    if section is Section.REMAINDER:
        new_state = new_state.with_section(event.actor, Section.ENTRY)
    return new_state


@dataclass(frozen=True)
class Run:
    """Initial state, event sequence, and the naming assignment per process."""

    initial: GlobalState
    events: tuple
    assignments: Mapping[ProcessId, NamingAssignment]

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __len__(self):
        return len(self.events)

    @property
    def m(self) -> int:
        return self.initial.memory.m

    def naming_of(self, pid: ProcessId) -> NamingAssignment:
        try:
            return self.assignments[pid]
        except KeyError:
            raise InvalidEventError(f"no naming assignment for {pid!r}") from None

    def events_by(self, pid: ProcessId) -> tuple:
        return tuple(e for e in self.events if e.actor == pid)

    def actors(self) -> set:
        return {e.actor for e in self.events}

    def prefix(self, n: int) -> "Run":
        return Run(self.initial, self.events[:n], self.assignments)

    def extended(self, events: Iterable[Event]) -> "Run":
        return Run(self.initial, self.events + tuple(events), self.assignments)

    def with_assignment(self, pid: ProcessId, naming: NamingAssignment) -> "Run":
        assignments = dict(self.assignments)
        assignments[pid] = naming
        return Run(self.initial, self.events, assignments)


def replay(run: Run, upto: Optional[int] = None, on_state=None) -> GlobalState:
    """Replay a run's events from its initial state (memory level).

    Returns the final state.  ``on_state(index, state)`` is invoked after
    each event when given; index -1 reports the initial state.
    """
    state = run.initial
    if on_state is not None:
        on_state(-1, state)
    events = run.events if upto is None else run.events[:upto]
    for i, event in enumerate(events):
        state = apply_event(state, event)
        if on_state is not None:
            on_state(i, state)
    return state


def validate_run(run: Run) -> GlobalState:
    """Replay and return the final state; raises on any divergence."""
    for event in run.events:
        if event.is_memory_access:
            naming = run.naming_of(event.actor)
            if naming.physical(event.logical) != event.physical:
                raise ReplayDivergenceError(
                    f"{event!r}: assignment maps logical {event.logical} to "
                    f"{naming.physical(event.logical)}, not {event.physical}"
                )
    return replay(run)


def is_prefix(x: Run, y: Run) -> bool:
    """True iff run x is a prefix of run y (same origin, leading events)."""
    return (
        x.initial == y.initial
        and len(x.events) <= len(y.events)
        and y.events[: len(x.events)] == x.events
    )


def run_difference(y: Run, x: Run) -> tuple:
    """Events of y after the prefix x (the suffix y - x)."""
    if not is_prefix(x, y):
        raise InvalidEventError("run difference requires x to be a prefix of y")
    return y.events[len(x.events):]
