import pytest

from anonmutex import (
    FREE,
    WAITING,
    Event,
    EventKind,
    GlobalState,
    NamingAssignment,
    ProcessId,
    Run,
    Section,
    apply_event,
    new_memory,
    owned,
    replay,
    validate_run,
)
from anonmutex.errors import ConfigError, InvalidEventError, ReplayDivergenceError
from anonmutex.model import is_prefix, run_difference
from anonmutex.runio import run_from_text, run_to_text
from anonmutex.values import parse_value


P1, P2 = ProcessId(1), ProcessId(2)


def two_proc_state(m):
    return GlobalState(
        new_memory(m),
        {},
        {P1: Section.REMAINDER, P2: Section.REMAINDER},
    )


class TestNewMemory:
    def test_seven_registers_all_free(self):
        mem = new_memory(7)
        assert mem.m == 7
        assert all(v == FREE for v in mem.values)

    def test_degenerate_size(self):
        assert new_memory(1).values == (FREE,)

    def test_zero_rejected(self):
        with pytest.raises(ConfigError):
            new_memory(0)


class TestApplyEvent:
    def test_write_updates_exactly_one_register(self):
        state = two_proc_state(7)
        ev = Event(P1, EventKind.WRITE, 3, 3, owned(P1))
        after = apply_event(state, ev)
        assert after.memory.value_at(3) == owned(P1)
        assert sum(1 for v in after.memory.values if v != FREE) == 1
        assert after.section_of(P1) is Section.ENTRY  # first access begins entry

    def test_stale_read_is_divergence(self):
        state = two_proc_state(7)
        state = apply_event(state, Event(P1, EventKind.WRITE, 3, 3, owned(P1)))
        with pytest.raises(ReplayDivergenceError):
            apply_event(state, Event(P2, EventKind.READ, 3, 3, FREE))

    def test_read_leaves_memory_alone(self):
        state = two_proc_state(7)
        after = apply_event(state, Event(P1, EventKind.READ, 1, 1, FREE))
        assert after.memory == state.memory

    def test_section_events_touch_only_the_section(self):
        state = two_proc_state(7).with_section(P1, Section.EXIT)
        after = apply_event(state, Event(P1, EventKind.ENTER_REMAINDER))
        assert after.section_of(P1) is Section.REMAINDER
        assert after.memory == state.memory

    def test_out_of_range_index(self):
        state = two_proc_state(7)
        with pytest.raises(InvalidEventError):
            apply_event(state, Event(P1, EventKind.WRITE, 8, 8, FREE))

    def test_cs_entry_requires_entry_section(self):
        state = two_proc_state(7)
        with pytest.raises(InvalidEventError):
            apply_event(state, Event(P1, EventKind.ENTER_CS))


class TestRunAlgebra:
    def make_run(self, events):
        initial = two_proc_state(3)
        assigns = {P1: NamingAssignment.identity(3), P2: NamingAssignment.identity(3)}
        return Run(initial, events, assigns)

    def test_prefix_plus_difference_reproduces(self):
        events = (
            Event(P1, EventKind.WRITE, 1, 1, owned(P1)),
            Event(P2, EventKind.READ, 1, 1, owned(P1)),
            Event(P1, EventKind.WRITE, 1, 1, FREE),
        )
        y = self.make_run(events)
        x = y.prefix(1)
        assert is_prefix(x, y)
        assert x.extended(run_difference(y, x)).events == y.events

    def test_validate_checks_assignment_consistency(self):
        bad = self.make_run((Event(P1, EventKind.WRITE, 1, 2, owned(P1)),))
        with pytest.raises(ReplayDivergenceError):
            validate_run(bad)

    def test_replay_reports_states(self):
        run = self.make_run((Event(P1, EventKind.WRITE, 1, 1, owned(P1)),))
        seen = []
        replay(run, on_state=lambda i, s: seen.append(i))
        assert seen == [-1, 0]


class TestRunSerialization:
    def test_roundtrip(self):
        initial = GlobalState(
            new_memory(5), {}, {P1: Section.REMAINDER, P2: Section.REMAINDER}
        )
        run = Run(
            initial,
            (
                Event(P1, EventKind.READ, 1, 1, FREE),
                Event(P1, EventKind.WRITE, 1, 1, owned(P1)),
                Event(P2, EventKind.READ, 1, 5, FREE),
                Event(P1, EventKind.ENTER_CS),
            ),
            {P1: NamingAssignment.identity(5), P2: NamingAssignment.reverse(5)},
        )
        # the serialized section event is legal only after entry; adjust
        run = Run(run.initial, run.events[:3], run.assignments)
        text = run_to_text(run)
        back = run_from_text(text)
        assert back.m == 5
        assert back.events == run.events
        assert back.assignments == dict(run.assignments)
        assert run_to_text(back) == text

    def test_value_tokens(self):
        assert parse_value("0") == FREE
        assert parse_value("W") == WAITING
        assert parse_value("id:9") == owned(ProcessId(9))
        assert owned(ProcessId(9)).token() == "id:9"
        with pytest.raises(InvalidEventError):
            parse_value("x")
