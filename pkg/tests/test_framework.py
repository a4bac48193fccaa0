import pytest

from anonmutex import (
    FREE,
    ActionKind,
    EventKind,
    NamingAssignment,
    ProcessId,
    new_memory,
    owned,
    relabel_ids,
    run_solo,
    step,
)
from anonmutex.errors import InvalidEventError, ProtocolError
from anonmutex.framework import replay_with_programs
from anonmutex.model import replay

from conftest import random_fig1_run

P1, P2 = ProcessId(1), ProcessId(2)


class TestStepProtocol:
    def test_zero_seen_leads_to_claim(self, fig1_m7):
        local = fig1_m7.begin_entry(fig1_m7.initial_local(P1, 7))
        assert fig1_m7.next_action(local).kind is ActionKind.READ_REG
        new_local, action = step(fig1_m7, local, FREE)
        assert action.kind is ActionKind.WRITE_REG
        assert action.value == owned(P1)

    def test_nonzero_keeps_scanning(self, fig1_m7):
        local = fig1_m7.begin_entry(fig1_m7.initial_local(P1, 7))
        new_local, action = step(fig1_m7, local, owned(P2))
        assert action.kind is ActionKind.READ_REG
        assert action.logical == 2

    def test_resting_process_stays_put(self, fig1_m7):
        local = fig1_m7.initial_local(P1, 7)
        assert fig1_m7.next_action(local).kind is ActionKind.STAY_REMAINDER

    def test_read_result_mismatch(self, fig1_m7):
        local = fig1_m7.begin_entry(fig1_m7.initial_local(P1, 7))
        with pytest.raises(ProtocolError):
            step(fig1_m7, local)  # pending read, no result
        claimed, _ = step(fig1_m7, local, FREE)
        with pytest.raises(ProtocolError):
            step(fig1_m7, claimed, FREE)  # pending write given a result


class TestRunSolo:
    def test_full_passage(self, fig1_m7):
        result = run_solo(fig1_m7, P1, new_memory(7), NamingAssignment.identity(7), 2000)
        assert result.completed
        cs_at = next(
            i for i, e in enumerate(result.run.events) if e.kind is EventKind.ENTER_CS
        )
        state = replay(result.run, upto=cs_at + 1)
        assert state.memory.count(lambda v: v.owned_by(P1)) == 5  # m - 2
        final = replay(result.run)
        assert final.is_quiescent()
        assert all(v == FREE for v in final.memory.values)

    def test_cap_semantics(self, fig1_m7):
        result = run_solo(fig1_m7, P1, new_memory(7), NamingAssignment.identity(7), 2)
        assert not result.completed
        kinds = [e.kind for e in result.run.events]
        assert kinds == [EventKind.READ, EventKind.WRITE]  # scan hit then claim

    def test_frozen_rival_blocks_passage(self, fig1_m7):
        # five registers already belong to a process that never moves: the
        # solo process cannot reach the ownership threshold and parks in a
        # waiting loop
        mem = new_memory(7)
        for r in (1, 2, 3, 4, 5):
            mem = mem.with_write(r, owned(P2))
        result = run_solo(fig1_m7, P1, mem, NamingAssignment.identity(7), 3000)
        assert not result.completed
        assert all(e.kind is not EventKind.ENTER_CS for e in result.run.events)


class TestRelabel:
    def test_identity_bijection(self):
        system = random_fig1_run(seed=11, steps=150)
        run = system.run_so_far()
        same = relabel_ids(run, {P1: P1, P2: P2})
        assert same.events == run.events

    def test_swap_and_replay(self, fig1_m7):
        system = random_fig1_run(seed=12, steps=200)
        run = system.run_so_far()
        swapped = relabel_ids(run, {P1: P2, P2: P1})
        programs = {P1: fig1_m7, P2: fig1_m7}
        final = replay_with_programs(swapped, programs)
        original = replay_with_programs(run, {P1: fig1_m7, P2: fig1_m7})
        # mirrored ownership in the final memories
        for a, b in zip(swapped.events, run.events):
            assert a.kind == b.kind and a.physical == b.physical
        assert final.memory.count(lambda v: v.owned_by(P1)) == original.memory.count(
            lambda v: v.owned_by(P2)
        )

    def test_fresh_identifiers(self, fig1_m7):
        system = random_fig1_run(seed=13, steps=180)
        run = system.run_so_far()
        fresh = {P1: ProcessId(1001), P2: ProcessId(1002)}
        relabeled = relabel_ids(run, fresh)
        replay_with_programs(relabeled, {fresh[P1]: fig1_m7, fresh[P2]: fig1_m7})

    def test_partial_bijection_rejected(self):
        system = random_fig1_run(seed=14, steps=50)
        with pytest.raises(InvalidEventError):
            relabel_ids(system.run_so_far(), {P1: ProcessId(5)})

    def test_non_injective_rejected(self):
        system = random_fig1_run(seed=15, steps=50)
        with pytest.raises(InvalidEventError):
            relabel_ids(system.run_so_far(), {P1: ProcessId(5), P2: ProcessId(5)})


class TestProgramReplay:
    def test_detects_foreign_event(self, fig1_m7):
        from anonmutex import Event, Run
        system = random_fig1_run(seed=16, steps=60)
        run = system.run_so_far()
        # corrupt one event: claim a register the program would not claim
        bad_events = list(run.events)
        idx = next(i for i, e in enumerate(bad_events) if e.kind is EventKind.WRITE)
        e = bad_events[idx]
        bad_events[idx] = Event(e.actor, e.kind, e.logical, e.physical, FREE)
        bad = Run(run.initial, tuple(bad_events), run.assignments)
        with pytest.raises(ProtocolError):
            replay_with_programs(bad, {P1: fig1_m7, P2: fig1_m7})


def test_relabeling_produces_the_relabeled_final_state(fig1_m7):
    """Replaying a relabeled run ends in the relabeled final state."""
    from anonmutex import owned as mk_owned
    system = random_fig1_run(seed=21, steps=140)
    run = system.run_so_far()
    programs = {P1: fig1_m7, P2: fig1_m7}
    original = replay_with_programs(run, programs)
    fresh = {P1: ProcessId(41), P2: ProcessId(42)}
    relabeled_final = replay_with_programs(
        relabel_ids(run, fresh), {fresh[P1]: fig1_m7, fresh[P2]: fig1_m7}
    )
    def mapped(value):
        if value.is_owned:
            return mk_owned(fresh[value.owner])
        return value
    assert relabeled_final.memory.values == tuple(
        mapped(v) for v in original.memory.values
    )
    for pid in (P1, P2):
        assert relabeled_final.section_of(fresh[pid]) == original.section_of(pid)
