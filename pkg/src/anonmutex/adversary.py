"""Constructive adversarial schedules.

Three drives live here.  The lock-step constructor runs two processes in
strict alternation from a symmetric quiescent state, renaming registers on
the fly whenever both are about to write the same unwritten register, until
every register has been written; it certifies that each process wrote into
half the registers (rounded up).  The even-register drive shows the same
lock-step discipline never breaks symmetry when no self-paired register
exists.  The hiding drive uses the constructed run to overwrite every write
a third process attempts before anyone reads it, keeping that process
indistinguishable from one that never left its remainder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .checker import Witness
from .errors import (
    CapExceededError,
    ConfigError,
    ConstructionInvariantError,
    InvalidEventError,
    StalledProcessError,
    SymmetryViolationError,
    UnknownQuiescentError,
)
from .framework import ActionKind, ProcessDriver, ProcessProgram, run_solo
from .model import (
    Event,
    EventKind,
    GlobalState,
    MemoryState,
    Run,
    Section,
    apply_event,
    new_memory,
    replay,
)
from .naming import NamingAssignment
from .predicates import erase_process, is_hidden, is_symmetric_state, looks_like, swap_run, extend_run
from .values import ProcessId, token_of

# -- register pairing ------------------------------------------------------


@dataclass(frozen=True)
class PairingTable:
    """Physical register pairs induced by the identity/reverse assignments."""

    m: int
    pi_p: NamingAssignment
    pi_q: NamingAssignment
    pairs: Tuple[Tuple[int, int], ...]
    self_pair_index: Optional[int]

    def format_lines(self) -> List[str]:
        lines = [f"m={self.m}\tself-pair={self.self_pair_index or '-'}"]
        lines.extend(f"pair {k + 1}\t({a}, {b})" for k, (a, b) in enumerate(self.pairs))
        return lines


def build_pairing(m: int) -> PairingTable:
    """Identity for the first process, reverse for the second.

    For odd m exactly one index pairs a register with itself (the middle
    one); for even m there is no such index and every register appears in
    two pairs.
    """
    if m < 1:
        raise ConfigError("register count must be at least 1")
    pi_p = NamingAssignment.identity(m)
    pi_q = NamingAssignment.reverse(m)
    pairs = tuple((pi_p.physical(k), pi_q.physical(k)) for k in range(1, m + 1))
    self_pair = (m + 1) // 2 if m % 2 == 1 else None
    return PairingTable(m, pi_p, pi_q, pairs, self_pair)


# -- lock-step machinery ---------------------------------------------------


class _PairDrive:
    """Two drivers advanced in lock-steps over one evolving run."""

    def __init__(self, program: ProcessProgram, m: int, p: ProcessId, q: ProcessId,
                 pi_p: NamingAssignment, pi_q: NamingAssignment,
                 sigma: Optional[GlobalState] = None):
        self.m = m
        self.p, self.q = p, q
        self.driver = {
            p: ProcessDriver(program, p, pi_p),
            q: ProcessDriver(program, q, pi_q),
        }
        memory = sigma.memory if sigma is not None else new_memory(m)
        locals_map = {p: self.driver[p].local, q: self.driver[q].local}
        sections = {p: Section.REMAINDER, q: Section.REMAINDER}
        self.state = GlobalState(memory, locals_map, sections)
        self.initial = self.state
        self.events: List[Event] = []
        self.assignments = {p: pi_p, q: pi_q}

    def run(self) -> Run:
        return Run(self.initial, tuple(self.events), dict(self.assignments))

    def pending(self, pid: ProcessId):
        driver = self.driver[pid]
        if driver.in_remainder():
            driver.begin_entry()
        return driver.pending()

    def exec_one(self, pid: ProcessId) -> Event:
        driver = self.driver[pid]
        if driver.in_remainder():
            driver.begin_entry()
        event = driver.make_event(self.state.memory)
        self.state = apply_event(self.state, event)
        driver.observe(event)
        self.state = self.state.with_local(pid, driver.local)
        self.events.append(event)
        return event

    def apply_swap(self, pid: ProcessId, c: int, k: int):
        """Rename two registers for one process across the run built so far."""
        new_run = swap_run(self.run(), pid, c, k)
        self.events = list(new_run.events)
        self.assignments[pid] = new_run.naming_of(pid)
        self.driver[pid].naming = new_run.naming_of(pid)

    def symmetric_now(self) -> bool:
        return is_symmetric_state(
            self.state, self.p, self.q, self.assignments[self.p], self.assignments[self.q]
        )


@dataclass
class SymmetricRunResult:
    """Output of the lock-step constructor."""

    run: Run
    assignments: Dict[ProcessId, NamingAssignment]
    construction_write_sets: Dict[ProcessId, frozenset]
    total_write_sets: Dict[ProcessId, frozenset]
    checkpoints: List[bool]
    break_index: int              # event index of the first write of the final collision
    cs_entries: Dict[ProcessId, int]
    swaps: List[Tuple[int, int, int]]  # (iteration, contended logical, replacement logical)
    final_state: GlobalState

    def format_lines(self) -> List[str]:
        pids = sorted(self.construction_write_sets, key=token_of)
        lines = [
            f"events={len(self.run.events)}\tbreak-at={self.break_index}\t"
            f"swaps={len(self.swaps)}",
        ]
        for pid in pids:
            cons = sorted(self.construction_write_sets[pid])
            lines.append(
                f"process={token_of(pid)}\tdistinct-writes={len(cons)}\t"
                f"registers={','.join(map(str, cons))}\t"
                f"total-distinct={len(self.total_write_sets[pid])}\t"
                f"cs-entries={self.cs_entries[pid]}"
            )
        lines.append("checkpoints " + "".join("1" if c else "0" for c in self.checkpoints))
        return lines


def _collect_write_sets(events: Sequence[Event], upto: Optional[int] = None) -> Dict[ProcessId, set]:
    out: Dict[ProcessId, set] = {}
    source = events if upto is None else events[:upto]
    for e in source:
        if e.kind is EventKind.WRITE:
            out.setdefault(e.actor, set()).add(e.physical)
    return out


def lockstep_construct(
    program: ProcessProgram,
    m: int,
    sigma: Optional[GlobalState] = None,
    step_cap: int = 200_000,
    pids: Optional[Tuple[ProcessId, ProcessId]] = None,
) -> SymmetricRunResult:
    """Run two processes in lock-steps from a symmetric quiescent state until
    every register is written, renaming registers on the fly.

    Four cases arise when both processes are poised to write.  Distinct
    targets simply proceed.  A shared, already-written target cannot occur
    (the renaming below prevents it; reaching it is an internal failure).  A
    shared unwritten target with every other register written is the final
    collision: both writes are delivered, symmetry breaks, and the pair is
    run to completion by fair alternation.  A shared unwritten target with
    other unwritten registers remaining triggers the rename: both processes'
    contended logical index is swapped with the smallest index whose two
    physical registers are unwritten, distinct, and different from the
    contended one; the run rebuilt by the swap replays by construction.
    """
    if m % 2 == 0:
        raise ConfigError("lock-step construction requires an odd register count")
    p, q = pids if pids is not None else (ProcessId(1), ProcessId(2))
    pi_p = NamingAssignment.identity(m)
    pi_q = NamingAssignment.reverse(m)
    drive = _PairDrive(program, m, p, q, pi_p, pi_q, sigma)
    if not is_symmetric_state(drive.state, p, q, pi_p, pi_q):
        raise InvalidEventError("starting state is not symmetric for the chosen namings")
    written: set = set()
    checkpoints: List[bool] = []
    swaps: List[Tuple[int, int, int]] = []
    break_index = -1
    steps = 0
    iteration = 0

    while break_index < 0:
        iteration += 1
        if steps >= step_cap:
            raise CapExceededError("lock-step budget exhausted before the final collision",
                                   partial=drive.run())
        act_p = drive.pending(p)
        act_q = drive.pending(q)
        if act_p.kind is ActionKind.ENTER_CS or act_q.kind is ActionKind.ENTER_CS:
            raise SymmetryViolationError(
                "a process is poised to enter its critical section during the symmetric phase"
            )
        if act_p.kind is not act_q.kind or act_p.logical != act_q.logical:
            raise ConstructionInvariantError(
                f"lock-step asymmetry: {act_p} vs {act_q} in a symmetric state"
            )
        if act_p.kind is ActionKind.READ_REG:
            drive.exec_one(p)
            drive.exec_one(q)
            steps += 2
            checkpoints.append(drive.symmetric_now())
            continue
        if act_p.kind is not ActionKind.WRITE_REG:
            raise ConstructionInvariantError(f"unexpected lock-step action {act_p}")
        target_p = drive.assignments[p].physical(act_p.logical)
        target_q = drive.assignments[q].physical(act_q.logical)
        if target_p != target_q:
            # case 1: two different registers
            drive.exec_one(p)
            drive.exec_one(q)
            steps += 2
            written.update((target_p, target_q))
            checkpoints.append(drive.symmetric_now())
            continue
        if target_p in written:
            # case 2: ruled out by construction
            raise ConstructionInvariantError(
                f"both processes target already-written register {target_p}"
            )
        if len(written) == m - 1:
            # case 3: the last register; deliver both writes and break symmetry
            break_index = len(drive.events)
            drive.exec_one(p)
            drive.exec_one(q)
            steps += 2
            written.add(target_p)
            checkpoints.append(drive.symmetric_now())
            continue
        # case 4: rename both processes away from the contended register
        c = act_p.logical
        choice = None
        for k in range(1, m + 1):
            if k == c:
                continue
            cand_p = drive.assignments[p].physical(k)
            cand_q = drive.assignments[q].physical(k)
            if cand_p == cand_q or cand_p == target_p or cand_q == target_p:
                continue
            if cand_p in written or cand_q in written:
                continue
            choice = k
            break
        if choice is None:
            raise ConstructionInvariantError(
                "no unwritten register pair available for renaming"
            )
        drive.apply_swap(p, c, choice)
        drive.apply_swap(q, c, choice)
        swaps.append((iteration, c, choice))

    construction_sets = _collect_write_sets(drive.events)
    # fair alternation until both complete one passage
    completed = {p: False, q: False}
    while not all(completed.values()):
        progressed = False
        for pid in (p, q):
            if completed[pid]:
                continue
            if steps >= step_cap:
                raise CapExceededError("completion budget exhausted", partial=drive.run())
            event = drive.exec_one(pid)
            steps += 1
            progressed = True
            if event.kind is EventKind.ENTER_REMAINDER:
                completed[pid] = True
        if not progressed:  # pragma: no cover
            raise ConstructionInvariantError("completion made no progress")

    run = drive.run()
    replay(run)
    total_sets = _collect_write_sets(run.events)
    cs_entries = {
        pid: sum(1 for e in run.events if e.actor == pid and e.kind is EventKind.ENTER_CS)
        for pid in (p, q)
    }
    return SymmetricRunResult(
        run=run,
        assignments=dict(drive.assignments),
        construction_write_sets={k: frozenset(v) for k, v in construction_sets.items()},
        total_write_sets={k: frozenset(v) for k, v in total_sets.items()},
        checkpoints=checkpoints,
        break_index=break_index,
        cs_entries=cs_entries,
        swaps=swaps,
        final_state=drive.state,
    )


# -- even register count: perpetual symmetry -------------------------------


@dataclass
class EvenMDriveResult:
    """Outcome of the lock-step drive at an even register count."""

    outcome: str  # deadlock-cycle | mutex-violation | inconclusive
    run: Run
    checkpoints: List[bool]
    witness: Optional[Witness] = None
    prefix_length: int = 0
    cycle_length: int = 0

    def format_lines(self) -> List[str]:
        lines = [f"outcome={self.outcome}\tevents={len(self.run.events)}"]
        if self.outcome == "deadlock-cycle":
            lines.append(f"prefix={self.prefix_length}\tcycle={self.cycle_length}")
        lines.append("checkpoints " + "".join("1" if c else "0" for c in self.checkpoints))
        return lines


def even_m_drive(program: ProcessProgram, m: int, step_cap: int = 100_000) -> EvenMDriveResult:
    """Lock-step drive with an even register count.

    The identity/reverse pairing has no self-paired register, so both
    processes always write distinct registers and symmetry never breaks.  A
    repeated global state with both processes competing yields a deadlock
    cycle.  If a configuration ever lets both processes through to the
    critical section (the degenerate sizes where the ownership target is no
    more than half the registers), the drive reports that mutex violation
    rather than inventing a cycle.
    """
    if m % 2 != 0:
        raise ConfigError("the even-register drive requires an even register count")
    p, q = ProcessId(1), ProcessId(2)
    drive = _PairDrive(program, m, p, q,
                       NamingAssignment.identity(m), NamingAssignment.reverse(m))
    checkpoints: List[bool] = []
    seen = {drive.state.key(): 0}
    steps = 0
    while steps < step_cap:
        act_p = drive.pending(p)
        act_q = drive.pending(q)
        if act_p.kind is ActionKind.ENTER_CS and act_q.kind is ActionKind.ENTER_CS:
            drive.exec_one(p)
            drive.exec_one(q)
            run = drive.run()
            witness = Witness("mutex-violation", run,
                              {"processes": [p, q]})
            witness.validate({p: program, q: program})
            return EvenMDriveResult("mutex-violation", run, checkpoints, witness)
        if act_p.kind is not act_q.kind or act_p.logical != act_q.logical:
            raise ConstructionInvariantError(
                f"lock-step asymmetry at even m: {act_p} vs {act_q}"
            )
        if act_p.kind is ActionKind.WRITE_REG:
            tp = drive.assignments[p].physical(act_p.logical)
            tq = drive.assignments[q].physical(act_q.logical)
            if tp == tq:
                raise ConstructionInvariantError(
                    "self-paired write target at even m; the pairing forbids this"
                )
        drive.exec_one(p)
        drive.exec_one(q)
        steps += 2
        checkpoints.append(drive.symmetric_now())
        key = drive.state.key()
        if key in seen:
            first = seen[key]
            run = drive.run()
            witness = Witness(
                "deadlock-cycle", run,
                {"prefix_length": first, "cycle_length": len(run.events) - first,
                 "anchored": p},
            )
            witness.validate({p: program, q: program})
            return EvenMDriveResult(
                "deadlock-cycle", run, checkpoints, witness,
                prefix_length=first, cycle_length=len(run.events) - first,
            )
        seen[key] = len(drive.events)
    return EvenMDriveResult("inconclusive", drive.run(), checkpoints)


# -- hiding a third process -------------------------------------------------


@dataclass
class HidingReport:
    """Per-cycle hidden verdicts and the terminal outcome of the hiding drive."""

    cycles_completed: int
    hidden_verdicts: List[bool]
    outcome: str  # still-hidden | entered-cs-while-hidden | stalled
    run: Run
    q_write_targets: List[int] = field(default_factory=list)
    quiescent_trace: List[str] = field(default_factory=list)
    violation_witness: Optional[Witness] = None

    def format_lines(self) -> List[str]:
        lines = [
            f"cycles={self.cycles_completed}\toutcome={self.outcome}\t"
            f"events={len(self.run.events)}",
            "hidden " + "".join("1" if h else "0" for h in self.hidden_verdicts),
        ]
        if self.q_write_targets:
            lines.append("overwritten-registers " + ",".join(map(str, self.q_write_targets)))
        if self.quiescent_trace:
            lines.append("quiescent-trace " + ",".join(self.quiescent_trace))
        return lines


class QuiescentRegistry:
    """Named quiescent memory templates with an associated process pair each.

    The drive identifies the current quiescent state by comparing register
    contents (every non-hidden process having returned to its remainder with
    reset locals), then schedules that state's pair for the next cycle.
    """

    def __init__(self, entries: Mapping[str, Tuple[MemoryState, Tuple[ProcessId, ProcessId]]]):
        if not entries:
            raise InvalidEventError("registry needs at least one quiescent state")
        self.entries = dict(entries)

    def identify(self, memory: MemoryState) -> str:
        for name, (template, _pair) in self.entries.items():
            if template == memory:
                return name
        raise UnknownQuiescentError(
            f"memory {memory!r} matches no registered quiescent state"
        )

    def pair_of(self, name: str) -> Tuple[ProcessId, ProcessId]:
        return self.entries[name][1]

    def memory_of(self, name: str) -> MemoryState:
        return self.entries[name][0]


def _q_solo_phase(driver: ProcessDriver, memory: MemoryState, cap: int):
    """Advance the hidden process until it is poised to write or to enter
    its critical section.  Returns (events, pending kind)."""
    events: List[Event] = []
    if driver.in_remainder():
        driver.begin_entry()
        if driver.in_remainder():
            return events, ActionKind.STAY_REMAINDER
    for _ in range(cap):
        action = driver.pending()
        if action.kind in (ActionKind.WRITE_REG, ActionKind.ENTER_CS):
            return events, action.kind
        event = driver.make_event(memory)
        driver.observe(event)
        events.append(event)
    raise StalledProcessError(
        "hidden process neither wrote nor reached its critical section within the cap"
    )


def hiding_drive(
    programs: Mapping[ProcessId, ProcessProgram],
    p1: ProcessId,
    p2: ProcessId,
    q: ProcessId,
    m: int,
    cycles: int,
    q_naming: Optional[NamingAssignment] = None,
    per_cycle_cap: int = 100_000,
) -> HidingReport:
    """Hide every write of process q behind the pair's constructed run.

    Each cycle runs q alone until it is poised to write some register r,
    transplants the pair's lock-step run up to just before its first write
    to r (justified by the run-extension argument and validated by replay),
    delivers q's write, and lets the very next event overwrite it before any
    other process reads r.  After the pair returns to its remainder the
    memory is back to the single quiescent state, so the same constructed
    run serves every cycle.  If q ever reaches its critical section while
    hidden, the drive erases q, extends the erased run with a solo passage
    of the pair's first process, and returns the resulting run: two
    processes inside the critical section at once.
    """
    registry = QuiescentRegistry({"initial": (new_memory(m), (p1, p2))})
    return hiding_drive_multi_quiescent(
        programs, registry, q, m, cycles, q_naming=q_naming, per_cycle_cap=per_cycle_cap
    )


def hiding_drive_multi_quiescent(
    programs: Mapping[ProcessId, ProcessProgram],
    registry: QuiescentRegistry,
    q: ProcessId,
    m: int,
    cycles: int,
    q_naming: Optional[NamingAssignment] = None,
    per_cycle_cap: int = 100_000,
) -> HidingReport:
    """Hiding drive over a registry of symmetric quiescent states.

    At each cycle boundary the current quiescent memory is matched against
    the registry; that state's associated pair plays the overwriting run for
    the next cycle.  A single-entry registry is exactly the memoryless
    drive.
    """
    if cycles < 0:
        raise InvalidEventError("cycle count must be nonnegative")
    q_naming = q_naming or NamingAssignment.identity(m)
    all_pids = sorted(set(programs), key=token_of)
    if q not in programs:
        raise InvalidEventError("the hidden process needs a program")

    # one construction per registered quiescent state, built on first use
    constructions: Dict[str, SymmetricRunResult] = {}
    assignments: Dict[ProcessId, NamingAssignment] = {q: q_naming}
    locals_map = {pid: programs[pid].initial_local(pid, m) for pid in all_pids}
    sections = {pid: Section.REMAINDER for pid in all_pids}
    initial = GlobalState(new_memory(m), locals_map, sections)
    events: List[Event] = []
    state = initial
    q_driver = ProcessDriver(programs[q], q, q_naming)
    hidden_verdicts: List[bool] = []
    q_targets: List[int] = []
    quiescent_trace: List[str] = []

    def current_run() -> Run:
        complete = {pid: NamingAssignment.identity(m) for pid in all_pids}
        complete.update(assignments)
        return Run(initial, tuple(events), complete)

    def splice_cycle(construction: SymmetricRunResult, pair, target: int, q_read_count: int):
        nonlocal state
        rho = construction.run
        first_write = next(
            (idx for idx, e in enumerate(rho.events)
             if e.kind is EventKind.WRITE and e.physical == target),
            None,
        )
        if first_write is None:
            raise ConstructionInvariantError(
                f"the constructed run never writes register {target}"
            )
        before = current_run()
        x = before.prefix(len(before.events) - q_read_count)
        extended = extend_run(before, x, x.extended(rho.events[:first_write]), set(pair))
        # q's pending write does not depend on memory contents
        q_write = q_driver.make_event(state.memory)
        all_events = extended.events + (q_write,) + rho.events[first_write:]
        spliced = Run(initial, all_events, dict(assignments))
        final = replay(spliced)
        events[:] = list(all_events)
        state = final
        q_driver.observe(q_write)

    outcome = "still-hidden"
    witness = None
    completed = 0
    for _cycle in range(cycles):
        # identify the quiescent state and its pair before running q
        name = registry.identify(state.memory)
        quiescent_trace.append(name)
        pair = registry.pair_of(name)
        for member in pair:
            if member == q or member not in programs:
                raise InvalidEventError(f"pair process {member!r} unavailable or hidden")
        if name not in constructions:
            sigma = GlobalState(
                registry.memory_of(name),
                {pair[0]: programs[pair[0]].initial_local(pair[0], m),
                 pair[1]: programs[pair[1]].initial_local(pair[1], m)},
                {pair[0]: Section.REMAINDER, pair[1]: Section.REMAINDER},
            )
            if not is_symmetric_state(sigma, pair[0], pair[1],
                                      NamingAssignment.identity(m),
                                      NamingAssignment.reverse(m)):
                raise InvalidEventError(
                    f"registered quiescent state {name!r} is not symmetric for its pair"
                )
            constructions[name] = lockstep_construct(
                programs[pair[0]], m, sigma=sigma, pids=pair
            )
            for member in pair:
                fixed = constructions[name].assignments[member]
                if member in assignments and assignments[member] != fixed:
                    raise ConstructionInvariantError(
                        f"{member!r} already runs under a different naming assignment"
                    )
                assignments[member] = fixed

        q_events, pending_kind = _q_solo_phase(q_driver, state.memory, per_cycle_cap)
        for e in q_events:
            state = apply_event(state, e)
            events.append(e)
        if pending_kind is ActionKind.STAY_REMAINDER:
            hidden_verdicts.append(True)  # resting processes are hidden by definition
            completed += 1
            continue
        if pending_kind is ActionKind.ENTER_CS:
            outcome = "entered-cs-while-hidden"
            enter = q_driver.make_event(state.memory)
            state = apply_event(state, enter)
            q_driver.observe(enter)
            events.append(enter)
            witness = _cs_while_hidden_witness(
                current_run(), programs, q, pair, m, assignments
            )
            break
        target = q_driver.naming.physical(q_driver.pending().logical)
        splice_cycle(constructions[name], pair, target, len(q_events))
        q_targets.append(target)
        run_now = current_run()
        hidden_verdicts.append(is_hidden(run_now, q))
        erased = erase_process(run_now, q)
        for member in pair:
            if not looks_like(run_now, erased, member):
                raise ConstructionInvariantError(
                    f"run is distinguishable from the erased run by {member!r}"
                )
        completed += 1

    return HidingReport(
        cycles_completed=completed,
        hidden_verdicts=hidden_verdicts,
        outcome=outcome,
        run=current_run(),
        q_write_targets=q_targets,
        quiescent_trace=quiescent_trace,
        violation_witness=witness,
    )


def _cs_while_hidden_witness(run_with_q_in_cs, programs, q, pair, m, assignments):
    """Build the two-in-CS extension: erase the hidden process, run the
    pair's first process solo to its critical section, and transplant that
    extension back onto the real run."""
    z = run_with_q_in_cs
    if not is_hidden(z, q):
        raise ConstructionInvariantError("process entered its CS but is not hidden")
    x = erase_process(z, q)
    final_x = replay(x)
    helper = pair[0]
    solo = run_solo(
        programs[helper], helper, final_x.memory, assignments[helper],
        step_cap=100_000, stop_after_cs_entry=True,
    )
    if not solo.completed:
        raise ConstructionInvariantError("solo extension never reached the critical section")
    extension = Run(x.initial, x.events + solo.run.events, dict(x.assignments))
    result = extend_run(z, x, extension, {helper})
    witness = Witness("mutex-violation", result, {"processes": [q, helper]})
    witness.validate(programs)
    return witness
