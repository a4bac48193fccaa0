import pytest

from anonmutex import (
    EventKind,
    NamingAssignment,
    ProcessId,
    new_memory,
    run_solo,
)
from anonmutex.errors import ConfigError
from anonmutex.fig1 import (
    Fig1Config,
    Variant,
    build_named,
    build_program,
    line_map,
)
from anonmutex.model import replay

from conftest import random_fig1_system

P1 = ProcessId(1)

#: events in one uncontended passage at m=7; the gate read and claim, three
#: full-array scans, the claim loop, the critical section bracket, and the
#: release sweep
SOLO_PASSAGE_EVENTS_M7 = 84


class TestConfigValidation:
    def test_standard_m7(self):
        assert build_program(Fig1Config(m=7)).own_target == 5

    def test_even_m_rejected(self):
        with pytest.raises(ConfigError):
            build_program(Fig1Config(m=6))

    def test_small_odd_m_rejected_without_override(self):
        with pytest.raises(ConfigError):
            build_program(Fig1Config(m=5))

    def test_override_builds_m5(self):
        prog = build_program(Fig1Config(m=5, allow_invalid_m=True))
        assert prog.own_target == 3 and prog.lose_threshold == 3

    def test_floor_of_three(self):
        with pytest.raises(ConfigError):
            build_program(Fig1Config(m=2, allow_invalid_m=True))

    def test_registry_names(self):
        assert build_named("fig1", 7).gate
        assert not build_named("fig1-no-gate", 7).gate
        assert build_named("fig1-one-reserved", 7).reserve == 1
        with pytest.raises(ConfigError):
            build_named("fig2", 7)


class TestLineMap:
    def test_known_phases(self):
        table = line_map(build_program(Fig1Config(m=7)))
        assert table["scan-for-zero"] == 1
        assert table["signal-waiting"] == 22
        assert table["release-after-cs-winner"] == 32

    def test_every_location_has_one_line(self):
        table = line_map(build_program(Fig1Config(m=7)))
        assert all(1 <= line <= 34 for line in table.values())

    def test_gate_locations_absent_in_gateless_variant(self):
        table = line_map(build_program(Fig1Config(m=7, variant=Variant.NO_PRIORITY_GATE)))
        assert "scan-for-zero" not in table
        assert table["probe-free"] == 12


class TestSoloPassage:
    def test_event_count_is_stable(self, fig1_m7):
        counts = set()
        for _ in range(3):
            res = run_solo(fig1_m7, P1, new_memory(7), NamingAssignment.identity(7), 2000)
            assert res.completed
            counts.add(len(res.run.events))
        assert counts == {SOLO_PASSAGE_EVENTS_M7}

    def test_enters_after_owning_five(self, fig1_m7):
        res = run_solo(fig1_m7, P1, new_memory(7), NamingAssignment.identity(7), 2000)
        cs = next(i for i, e in enumerate(res.run.events) if e.kind is EventKind.ENTER_CS)
        state = replay(res.run, upto=cs)
        assert state.memory.count(lambda v: v.owned_by(P1)) == 5


class TestReachableInvariants:
    """Checked along random two-process schedules."""

    def run_random(self, seed, m=7, steps=2500, variant=None):
        system, procs, rnd = random_fig1_system(seed, m=m, variant=variant)
        ownership_cap = m - 2
        waiting_writer = {}
        for _ in range(steps):
            actor = procs[rnd.randrange(len(procs))]
            event = system.step(actor)
            if event.kind is EventKind.WRITE:
                # write-value discipline: free, waiting, or the writer's id
                assert (
                    event.value.is_free
                    or event.value.is_waiting
                    or event.value.owned_by(actor)
                )
                if event.value.is_waiting:
                    waiting_writer[event.physical] = actor
                else:
                    waiting_writer.pop(event.physical, None)
            for p in procs:
                owned_count = system.state.memory.count(lambda v: v.owned_by(p))
                assert owned_count <= ownership_cap
            per_writer = {}
            for reg, writer in waiting_writer.items():
                per_writer[writer] = per_writer.get(writer, 0) + 1
            assert all(count <= 2 for count in per_writer.values())
            if system.is_quiescent():
                assert system.state == system.initial_state()
        return system

    @pytest.mark.parametrize("seed", [101, 202, 303])
    def test_standard_m7(self, seed):
        self.run_random(seed)

    def test_m9(self):
        self.run_random(404, m=9)

    def test_one_reserved_caps_at_one_waiting(self):
        system, procs, rnd = random_fig1_system(
            77, m=7, variant=Variant.ONE_RESERVED_REGISTER
        )
        for _ in range(2500):
            system.step(procs[rnd.randrange(2)])
            waiting = system.state.memory.count(lambda v: v.is_waiting)
            assert waiting <= 2  # one per process at most
