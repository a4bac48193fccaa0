"""Property verification: bounded exhaustive exploration, randomized fair
schedules, liveness lasso search, and remote-memory-reference accounting.

Exploration and fuzzing run on the stepping kernel (compiled when available)
whenever every process executes one of the built-in program variants; any
other program mix falls back to the generic model-layer engine.  Verdicts are
self-validating: every Violated report carries a witness run that replays to
a state exhibiting the violation.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import engine
from .errors import InvalidEventError
from .fig1 import Fig1Program
from .framework import ProcessDriver, ProcessProgram, replay_with_programs
from .model import EventKind, GlobalState, Run, Section, apply_event
from .naming import NamingAssignment
from .sim import System
from .values import ProcessId, token_of

# -- configuration ------------------------------------------------------


@dataclass(frozen=True)
class FixedPair:
    """Explore/fuzz exactly one naming pair: identity and reverse."""


@dataclass(frozen=True)
class EnumerateRelative:
    """All m! relative assignments (identity for the first process)."""


@dataclass(frozen=True)
class SampleRelative:
    """Identity/reverse plus ``count`` sampled relative assignments."""

    count: int
    seed: int


PermutationMode = object  # FixedPair | EnumerateRelative | SampleRelative


@dataclass(frozen=True)
class ExplorationLimits:
    max_states: int = 1_000_000
    max_depth: int = 0  # 0 = unbounded
    permutation_mode: PermutationMode = FixedPair()

    def __post_init__(self):
        if self.max_states < 1 or self.max_depth < 0:
            raise InvalidEventError("exploration limits must be positive")


def permutation_pairs(mode: PermutationMode, m: int) -> List[Tuple[NamingAssignment, NamingAssignment]]:
    """Concrete (first, second) naming pairs for a coverage mode."""
    identity = NamingAssignment.identity(m)
    if isinstance(mode, FixedPair):
        return [(identity, NamingAssignment.reverse(m))]
    if isinstance(mode, EnumerateRelative):
        import itertools

        return [(identity, NamingAssignment(p)) for p in itertools.permutations(range(1, m + 1))]
    if isinstance(mode, SampleRelative):
        pairs = [(identity, NamingAssignment.reverse(m))]
        rng = mode.seed & 0xFFFFFFFFFFFFFFFF
        for _ in range(mode.count):
            table = list(range(1, m + 1))
            for i in range(m - 1, 0, -1):
                rng, r = engine.splitmix64(rng)
                j = r % (i + 1)
                table[i], table[j] = table[j], table[i]
            pairs.append((identity, NamingAssignment(table)))
        return pairs
    raise InvalidEventError(f"unknown permutation mode {mode!r}")


# -- verdicts and reports ------------------------------------------------


@dataclass
class Witness:
    """A replayable counterexample."""

    kind: str  # mutex-violation | starvation-lasso | deadlock-cycle | memoryless-breach
    run: Run
    details: dict = field(default_factory=dict)

    def validate(self, programs: Mapping[ProcessId, ProcessProgram]) -> GlobalState:
        """Replay against the programs and check the violation is exhibited."""
        final = replay_with_programs(self.run, programs)
        if self.kind == "mutex-violation":
            in_cs = [p for p in self.details["processes"] if final.section_of(p) is Section.CS]
            if len(in_cs) < 2:
                raise InvalidEventError("mutex witness does not end with two processes in CS")
        elif self.kind == "memoryless-breach":
            if not final.is_quiescent():
                raise InvalidEventError("memoryless witness does not end quiescent")
            baseline = replay_with_programs(self.run.prefix(0), programs)
            if final.key() == baseline.key():
                raise InvalidEventError("memoryless witness ends at the initial state")
        elif self.kind in ("starvation-lasso", "deadlock-cycle"):
            self._validate_lasso(final, programs)
        return final

    def _validate_lasso(self, final, programs):
        prefix_len = self.details["prefix_length"]
        cycle_len = self.details["cycle_length"]
        if cycle_len < 1 or prefix_len + cycle_len != len(self.run.events):
            raise InvalidEventError("lasso lengths do not cover the witness run")
        at_prefix = replay_with_programs(self.run.prefix(prefix_len), programs)
        if at_prefix.key() != final.key():
            raise InvalidEventError("lasso does not return to the repeated state")
        cycle_events = self.run.events[prefix_len:]
        steppers = {e.actor for e in cycle_events}
        anchored = self.details.get("starved", self.details.get("anchored"))
        if anchored is not None and anchored not in steppers:
            raise InvalidEventError("anchored process takes no step in the cycle")
        state = at_prefix
        active = set()
        for e in cycle_events:
            if self.kind == "deadlock-cycle" and e.kind is EventKind.ENTER_CS:
                raise InvalidEventError("deadlock cycle contains a CS entry")
            if anchored is not None and state.section_of(anchored) is not Section.ENTRY:
                raise InvalidEventError("anchored process leaves entry inside the cycle")
            active |= {p for p in programs if state.section_of(p) is not Section.REMAINDER}
            state = apply_event(state, e)
        missing = active - steppers
        if missing:
            raise InvalidEventError(
                f"non-remainder process(es) {sorted(map(repr, missing))} never step in the cycle"
            )


@dataclass
class Verdict:
    kind: str  # holds | violated | inconclusive
    witness: Optional[Witness] = None
    reason: str = ""

    @classmethod
    def holds(cls):
        return cls("holds")

    @classmethod
    def violated(cls, witness: Witness):
        return cls("violated", witness=witness)

    @classmethod
    def inconclusive(cls, reason: str):
        return cls("inconclusive", reason=reason)

    def __str__(self):
        if self.kind == "holds":
            return "HoldsWithinBounds"
        if self.kind == "violated":
            return f"Violated({self.witness.kind})"
        return f"Inconclusive({self.reason})"


@dataclass
class PropertyReport:
    property: str  # mutex | deadlock-free | starvation-free | memoryless
    verdict: Verdict
    states_visited: int = 0
    permutations_covered: int = 1
    extra: dict = field(default_factory=dict)

    def format_line(self) -> str:
        return (
            f"property={self.property}\tverdict={self.verdict}\t"
            f"states={self.states_visited}\tpermutations={self.permutations_covered}"
        )


# -- exploration ---------------------------------------------------------


@dataclass
class ExplorationGraph:
    """Reachable interleaving graph plus the BFS tree used for witnesses."""

    programs: Mapping[ProcessId, ProcessProgram]
    assignments: Mapping[ProcessId, NamingAssignment]
    m: int
    pids: Sequence[ProcessId]
    complete: bool
    n_states: int
    parent: Sequence[int]
    parent_actor: Sequence[int]
    entry_mask: bytes
    nonrem_mask: bytes
    cs_mask: bytes
    edges_src: Sequence[int]
    edges_dst: Sequence[int]
    edges_actor: Sequence[int]
    edges_cs: Sequence[int]
    keys: Optional[List[bytes]] = None          # kernel path
    states: Optional[List[GlobalState]] = None  # generic path

    def actor_path(self, sid: int) -> List[ProcessId]:
        actors = []
        while sid != 0:
            actors.append(self.pids[self.parent_actor[sid]])
            sid = self.parent[sid]
        actors.reverse()
        return actors

    def run_to(self, sid: int, extra_actors: Sequence[ProcessId] = ()) -> Run:
        system = System(self.programs, self.m, self.assignments)
        for pid in self.actor_path(sid):
            system.step(pid)
        for pid in extra_actors:
            system.step(pid)
        return system.run_so_far()

    def state_at(self, sid: int) -> GlobalState:
        if self.states is not None:
            return self.states[sid]
        system = System(self.programs, self.m, self.assignments)
        for pid in self.actor_path(sid):
            system.step(pid)
        return system.state

    def same_as_initial(self, sid: int) -> bool:
        if self.keys is not None:
            return self.keys[sid] == self.keys[0]
        return self.states[sid].key() == self.states[0].key()

    def quiescent_ids(self) -> List[int]:
        return [i for i in range(self.n_states) if self.nonrem_mask[i] == 0]


def _kernel_eligible(programs: Mapping[ProcessId, ProcessProgram], m: int) -> bool:
    progs = list(programs.values())
    if not progs or not all(isinstance(p, Fig1Program) for p in progs):
        return False
    first = progs[0]
    if any(p.m != m or p.gate != first.gate or p.reserve != first.reserve for p in progs):
        return False
    return all(1 <= token_of(pid) <= 120 for pid in programs)


def _make_kernel(programs, m, assignments, pids):
    prog = programs[pids[0]]
    tables = [list(assignments[p].table) for p in pids]
    return engine.Fig1Kernel(m, [token_of(p) for p in pids], tables, bool(prog.gate), prog.reserve)


def explore(
    programs: Mapping[ProcessId, ProcessProgram],
    m: int,
    assignments: Mapping[ProcessId, NamingAssignment],
    limits: ExplorationLimits,
) -> ExplorationGraph:
    """Breadth-first closure of the interleaving graph with state hashing.

    Scheduler choices at quiescent points are part of the graph: stepping a
    resting process delivers its begin-entry signal together with its first
    event, and staying put is the implicit alternative (cycles, not infinite
    branches).  Truncation by the caps is reported via ``complete=False``.
    """
    if not programs:
        raise InvalidEventError("exploration needs at least one process")
    pids = sorted(programs, key=token_of)
    for pid in pids:
        if assignments[pid].m != m:
            raise InvalidEventError(f"assignment for {pid!r} does not cover 1..{m}")
    if _kernel_eligible(programs, m):
        kern = _make_kernel(programs, m, assignments, pids)
        (complete, keys, parent, parent_actor, _depth, entry_mask, nonrem_mask,
         cs_mask, esrc, edst, eact, ecs) = kern.explore(limits.max_states, limits.max_depth)
        return ExplorationGraph(
            programs, assignments, m, pids, complete, len(keys), parent, parent_actor,
            entry_mask, nonrem_mask, cs_mask, esrc, edst, eact, ecs, keys=keys,
        )
    return _explore_generic(programs, m, assignments, limits, pids)


def _expand_generic(programs, assignments, state, pids):
    for idx, pid in enumerate(pids):
        driver = ProcessDriver(programs[pid], pid, assignments[pid], state.locals[pid])
        if driver.in_remainder():
            driver.begin_entry()
            if driver.in_remainder():  # program declines to compete
                continue
        event = driver.make_event(state.memory)
        new_state = apply_event(state, event)
        driver.observe(event)
        new_state = new_state.with_local(pid, driver.local)
        yield idx, event, new_state


def _masks_of(state, pids):
    entry = nonrem = cs = 0
    for i, pid in enumerate(pids):
        section = state.section_of(pid)
        if section is not Section.REMAINDER:
            nonrem |= 1 << i
        if section is Section.ENTRY:
            entry |= 1 << i
        elif section is Section.CS:
            cs |= 1 << i
    return entry, nonrem, cs


def _explore_generic(programs, m, assignments, limits, pids):
    system = System(programs, m, assignments)
    initial = system.initial_state()
    index = {initial.key(): 0}
    states = [initial]
    parent = array("i", [-1])
    parent_actor = array("b", [-1])
    depth = array("i", [0])
    entry_mask = bytearray(1)
    nonrem_mask = bytearray(1)
    cs_mask = bytearray(1)
    entry_mask[0], nonrem_mask[0], cs_mask[0] = _masks_of(initial, pids)
    edges_src = array("i")
    edges_dst = array("i")
    edges_actor = array("b")
    edges_cs = array("b")
    truncated = False
    head = 0
    while head < len(states):
        d = depth[head]
        if limits.max_depth and d >= limits.max_depth:
            truncated = True
            head += 1
            continue
        for idx, event, new_state in _expand_generic(programs, assignments, states[head], pids):
            key = new_state.key()
            sid = index.get(key, -1)
            if sid < 0:
                if len(states) >= limits.max_states:
                    truncated = True
                    continue
                sid = len(states)
                index[key] = sid
                states.append(new_state)
                parent.append(head)
                parent_actor.append(idx)
                depth.append(d + 1)
                e, nr, cs = _masks_of(new_state, pids)
                entry_mask.append(e)
                nonrem_mask.append(nr)
                cs_mask.append(cs)
            edges_src.append(head)
            edges_dst.append(sid)
            edges_actor.append(idx)
            edges_cs.append(1 if event.kind is EventKind.ENTER_CS else 0)
        head += 1
    return ExplorationGraph(
        programs, assignments, m, pids, not truncated, len(states), parent, parent_actor,
        bytes(entry_mask), bytes(nonrem_mask), bytes(cs_mask),
        edges_src, edges_dst, edges_actor, edges_cs, states=states,
    )


# -- safety checks -------------------------------------------------------


def check_mutual_exclusion(graph: ExplorationGraph) -> PropertyReport:
    """Violated iff some visited state has two or more processes in the CS."""
    for sid in range(graph.n_states):
        mask = graph.cs_mask[sid]
        if bin(mask).count("1") >= 2:
            occupants = [graph.pids[i] for i in range(len(graph.pids)) if mask & (1 << i)]
            witness = Witness(
                "mutex-violation",
                graph.run_to(sid),
                {"processes": occupants, "state_id": sid},
            )
            witness.validate(graph.programs)
            return PropertyReport("mutex", Verdict.violated(witness), graph.n_states)
    return PropertyReport("mutex", Verdict.holds(), graph.n_states)


def check_memoryless(graph: ExplorationGraph, initial: Optional[GlobalState] = None) -> PropertyReport:
    """Violated iff some visited quiescent state differs from the initial one.

    The report's ``extra`` carries the enumerated quiescent states (decoded)
    and their count; a memoryless program has exactly one.
    """
    quiescent = graph.quiescent_ids()
    baseline_ok = initial is None or initial == graph.state_at(0)
    if not baseline_ok:
        raise InvalidEventError("supplied initial state does not match the graph's root")
    offending = [sid for sid in quiescent if not graph.same_as_initial(sid)]
    decoded = [graph.state_at(sid) for sid in quiescent[:64]]
    extra = {"quiescent_count": len(quiescent), "quiescent_states": decoded}
    if offending:
        sid = offending[0]
        witness = Witness("memoryless-breach", graph.run_to(sid), {"state_id": sid})
        witness.validate(graph.programs)
        return PropertyReport("memoryless", Verdict.violated(witness), graph.n_states, extra=extra)
    return PropertyReport("memoryless", Verdict.holds(), graph.n_states, extra=extra)


# -- liveness checks (lasso search over the closed graph) ----------------


def _edge_arrays(graph):
    import numpy as np

    src = np.asarray(graph.edges_src, dtype=np.int64)
    dst = np.asarray(graph.edges_dst, dtype=np.int64)
    act = np.asarray(graph.edges_actor, dtype=np.int64)
    iscs = np.asarray(graph.edges_cs, dtype=np.bool_)
    return src, dst, act, iscs


def _find_fair_lasso(graph: ExplorationGraph, forbid_cs_edges: bool):
    """A reachable cycle in which some process sits in Entry at every state,
    taking at least one step, while every process that is ever out of its
    remainder inside the cycle also steps.  Returns (starved index, node ids,
    edge list) or None.
    """
    import numpy as np
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    src, dst, act, iscs = _edge_arrays(graph)
    entry = np.frombuffer(graph.entry_mask, dtype=np.uint8)
    nonrem = np.frombuffer(graph.nonrem_mask, dtype=np.uint8)
    n = graph.n_states
    for pi in range(len(graph.pids)):
        bit = 1 << pi
        node_ok = (entry & bit).astype(bool)
        edge_ok = node_ok[src] & node_ok[dst]
        if forbid_cs_edges:
            edge_ok &= ~iscs
        if not edge_ok.any():
            continue
        es, ed, ea = src[edge_ok], dst[edge_ok], act[edge_ok]
        graph_m = csr_matrix((np.ones(len(es), dtype=np.int8), (es, ed)), shape=(n, n))
        ncomp, labels = connected_components(graph_m, directed=True, connection="strong")
        comp_of_edge = labels[es]
        same = labels[ed] == comp_of_edge
        # candidate components: contain an internal edge (self-loops included)
        internal = same
        if not internal.any():
            continue
        comp_ids, counts = np.unique(comp_of_edge[internal], return_counts=True)
        comp_sizes = np.bincount(labels, minlength=ncomp)
        for comp in comp_ids:
            in_comp_edge = internal & (comp_of_edge == comp)
            has_self_loop = (es[in_comp_edge] == ed[in_comp_edge]).any()
            if comp_sizes[comp] < 2 and not has_self_loop:
                continue
            actors_in = set(ea[in_comp_edge].tolist())
            if pi not in actors_in:
                continue
            comp_nodes = np.flatnonzero(labels == comp)
            required = 0
            for node in comp_nodes:
                required |= nonrem[node]
            required_set = {i for i in range(len(graph.pids)) if required & (1 << i)}
            if not required_set <= actors_in:
                continue
            cycle = _build_cycle(
                es[in_comp_edge], ed[in_comp_edge], ea[in_comp_edge],
                sorted(required_set | {pi}),
            )
            if cycle is not None:
                return pi, cycle
    return None


def _build_cycle(es, ed, ea, needed_actors):
    """Closed walk inside one strongly connected edge set covering one edge
    per needed actor.  Returns a list of (src, dst, actor) edges."""
    from collections import defaultdict, deque

    adj = defaultdict(list)
    for s, d, a in zip(es.tolist(), ed.tolist(), ea.tolist()):
        adj[s].append((d, a))
    chosen = []
    for actor in needed_actors:
        for s, d, a in zip(es.tolist(), ed.tolist(), ea.tolist()):
            if a == actor:
                chosen.append((s, d, a))
                break
    if len(chosen) != len(needed_actors):
        return None

    def path(u, v):
        if u == v:
            return []
        prev = {u: None}
        queue = deque([u])
        while queue:
            x = queue.popleft()
            for (y, a) in adj[x]:
                if y not in prev:
                    prev[y] = (x, a)
                    if y == v:
                        out = []
                        while v != u:
                            x2, a2 = prev[v]
                            out.append((x2, v, a2))
                            v = x2
                        out.reverse()
                        return out
                    queue.append(y)
        return None

    walk = []
    for i, (s, d, a) in enumerate(chosen):
        if i == 0:
            walk.append((s, d, a))
            continue
        bridge = path(walk[-1][1], s)
        if bridge is None:
            return None
        walk.extend(bridge)
        walk.append((s, d, a))
    closing = path(walk[-1][1], walk[0][0])
    if closing is None:
        return None
    walk.extend(closing)
    return walk


def _lasso_report(graph, prop: str, forbid_cs: bool, witness_kind: str) -> PropertyReport:
    if not graph.complete:
        return PropertyReport(
            prop, Verdict.inconclusive("graph truncated by exploration limits"), graph.n_states
        )
    found = _find_fair_lasso(graph, forbid_cs)
    if found is None:
        return PropertyReport(prop, Verdict.holds(), graph.n_states)
    pi, cycle = found
    start = cycle[0][0]
    prefix_actors = graph.actor_path(start)
    cycle_actors = [graph.pids[a] for (_s, _d, a) in cycle]
    run = graph.run_to(start, extra_actors=cycle_actors)
    details = {
        "prefix_length": len(prefix_actors),
        "cycle_length": len(cycle_actors),
    }
    if witness_kind == "starvation-lasso":
        details["starved"] = graph.pids[pi]
    else:
        details["anchored"] = graph.pids[pi]
    witness = Witness(witness_kind, run, details)
    witness.validate(graph.programs)
    return PropertyReport(prop, Verdict.violated(witness), graph.n_states)


def check_starvation_freedom(graph: ExplorationGraph) -> PropertyReport:
    """Lasso with one process stuck in Entry while every active process steps."""
    return _lasso_report(graph, "starvation-free", False, "starvation-lasso")


def check_deadlock_freedom(graph: ExplorationGraph) -> PropertyReport:
    """As starvation, but no CS entry may occur anywhere in the cycle."""
    return _lasso_report(graph, "deadlock-free", True, "deadlock-cycle")


def check_all(graph: ExplorationGraph, initial=None) -> List[PropertyReport]:
    return [
        check_mutual_exclusion(graph),
        check_deadlock_freedom(graph),
        check_starvation_freedom(graph),
        check_memoryless(graph, initial),
    ]


# -- randomized fair schedules -------------------------------------------

#: scheduler shape shared by both backends: round-robin with random burst
#: lengths 1..BURST_MAX; a resting process begins entry with probability
#: BEGIN_NUM/BEGIN_DEN, otherwise it forfeits the turn.
BURST_MAX = 6
BEGIN_NUM = 7
BEGIN_DEN = 8

_FUZZ_CODES = {1: "mutex-violation", 2: "memoryless-breach", 3: "progress-flag"}


@dataclass
class FuzzReport:
    """Aggregate outcome of a fuzz campaign."""

    schedules_run: int
    steps_per_schedule: int
    permutations_covered: int
    seed: int
    mutex_violations: int = 0
    memoryless_breaches: int = 0
    progress_flags: int = 0
    first_witnesses: Dict[str, Witness] = field(default_factory=dict)
    first_locator: Dict[str, Tuple[int, int]] = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not (self.mutex_violations or self.memoryless_breaches or self.progress_flags)

    def property_reports(self) -> List[PropertyReport]:
        steps = self.schedules_run * self.steps_per_schedule
        def verdict(count, kind):
            if count:
                return Verdict.violated(self.first_witnesses[kind])
            return Verdict.holds()
        return [
            PropertyReport("mutex", verdict(self.mutex_violations, "mutex-violation"),
                           steps, self.permutations_covered),
            PropertyReport("memoryless", verdict(self.memoryless_breaches, "memoryless-breach"),
                           steps, self.permutations_covered),
        ]

    def format_lines(self) -> List[str]:
        lines = [
            f"schedules={self.schedules_run}\tsteps-each={self.steps_per_schedule}\t"
            f"permutations={self.permutations_covered}\tseed={self.seed}",
            f"mutex-violations={self.mutex_violations}\t"
            f"memoryless-breaches={self.memoryless_breaches}\t"
            f"progress-flags={self.progress_flags}",
        ]
        for kind, (pair, sched) in sorted(self.first_locator.items()):
            lines.append(f"first-{kind}\tpair={pair}\tschedule={sched}")
        return lines


def _generic_fuzz_schedule(programs, m, assignments, pids, seed, steps, burst_max,
                           begin_num, begin_den, progress_cap):
    """Model-layer twin of the kernel's fuzz_schedule (any program mix)."""
    system = System(programs, m, assignments)
    n = len(pids)
    rng = seed & 0xFFFFFFFFFFFFFFFF
    choices = bytearray(steps)
    entry_start = [-1] * n
    cs_count = 0
    ptr = n - 1
    burst = 0
    initial_key = system.initial_state().key()
    for t in range(steps):
        if burst == 0:
            ptr = (ptr + 1) % n
            rng, r = engine.splitmix64(rng)
            burst = 1 + (r % burst_max)
        burst -= 1
        p = ptr
        pid = pids[p]
        if system.section_of(pid) is Section.REMAINDER:
            rng, r = engine.splitmix64(rng)
            if (r % begin_den) >= begin_num:
                choices[t] = 0x80 | p
                burst = 0
                continue
            entry_start[p] = t
        event = system.step(pid)
        choices[t] = p
        if event.kind is EventKind.ENTER_CS:
            entry_start[p] = -1
            cs_count += 1
            if cs_count >= 2:
                return 1, t, bytes(choices[: t + 1])
        elif event.kind is EventKind.EXIT_CS:
            cs_count -= 1
        elif event.kind is EventKind.ENTER_REMAINDER:
            if system.is_quiescent() and system.state_key() != initial_key:
                return 2, t, bytes(choices[: t + 1])
        if entry_start[p] >= 0 and t - entry_start[p] >= progress_cap:
            return 3, t, bytes(choices[: t + 1])
    for p in range(n):
        if entry_start[p] >= 0 and steps - entry_start[p] >= progress_cap:
            return 3, steps - 1, bytes(choices)
    return 0, -1, b""


def _witness_from_choices(programs, m, assignments, pids, choices, kind):
    system = System(programs, m, assignments)
    for c in choices:
        if c & 0x80:
            continue
        system.step(pids[c & 0x7F])
    details = {}
    if kind == "mutex-violation":
        details["processes"] = system.cs_occupants()
    witness = Witness(kind, system.run_so_far(), details)
    witness.validate(programs)
    return witness


def _fuzz_pairs(programs, m, indexed_pairs, budgets, seed, steps, cap):
    """Fuzz one slice of the permutation pairs; returns mergeable counters.

    ``indexed_pairs`` carries the pairs with their global indices so that the
    per-schedule seeds (and hence the outcomes) do not depend on sharding.
    """
    pids = sorted(programs, key=token_of)
    use_kernel = _kernel_eligible(programs, m)
    out = {
        "schedules_run": 0,
        "counts": {1: 0, 2: 0, 3: 0},
        "first": {},  # code -> (pair_index, schedule_index, choices)
    }
    for pair_index, pair in indexed_pairs:
        assignments = _pair_assignments(pids, pair, m)
        kern = _make_kernel(programs, m, assignments, pids) if use_kernel else None
        for schedule_index in range(budgets[pair_index]):
            sched_seed = engine.schedule_seed(seed, pair_index, schedule_index)
            if kern is not None:
                code, _at, choices = kern.fuzz_schedule(
                    sched_seed, steps, BURST_MAX, BEGIN_NUM, BEGIN_DEN, cap
                )
            else:
                code, _at, choices = _generic_fuzz_schedule(
                    programs, m, assignments, pids, sched_seed, steps,
                    BURST_MAX, BEGIN_NUM, BEGIN_DEN, cap
                )
            out["schedules_run"] += 1
            if code == 0:
                continue
            out["counts"][code] += 1
            if code not in out["first"]:
                out["first"][code] = (pair_index, schedule_index, choices)
    return out


def _fuzz_worker(args):
    return _fuzz_pairs(*args)


def fuzz_schedules(
    programs: Mapping[ProcessId, ProcessProgram],
    m: int,
    permutation_mode: PermutationMode,
    schedules: int,
    steps_per_schedule: int,
    seed: int,
    progress_cap: Optional[int] = None,
    workers: int = 1,
) -> FuzzReport:
    """Random fair schedules over a set of naming pairs.

    The schedule budget is spread across the permutation pairs; every
    (pair, schedule) cell derives its own generator seed, so reports are
    identical no matter how the work is sharded across workers.  Any
    violation yields a replayable witness reconstructed through the model
    layer.
    """
    if schedules < 1 or steps_per_schedule < 1:
        raise InvalidEventError("schedule counts must be positive")
    pids = sorted(programs, key=token_of)
    if len(pids) < 2:
        raise InvalidEventError("fuzzing needs at least two processes")
    pairs = permutation_pairs(permutation_mode, m)
    cap = progress_cap if progress_cap is not None else steps_per_schedule
    per, extra = divmod(schedules, len(pairs))
    budgets = [per + (1 if i < extra else 0) for i in range(len(pairs))]
    indexed = list(enumerate(pairs))
    if workers <= 1 or len(indexed) == 1:
        partials = [_fuzz_pairs(programs, m, indexed, budgets, seed, steps_per_schedule, cap)]
    else:
        import concurrent.futures as cf

        shards = [indexed[w::workers] for w in range(workers)]
        tasks = [
            (programs, m, shard, budgets, seed, steps_per_schedule, cap)
            for shard in shards if shard
        ]
        with cf.ProcessPoolExecutor(max_workers=len(tasks)) as pool:
            partials = list(pool.map(_fuzz_worker, tasks))

    report = FuzzReport(0, steps_per_schedule, len(pairs), seed)
    firsts = {}
    for part in partials:
        report.schedules_run += part["schedules_run"]
        report.mutex_violations += part["counts"][1]
        report.memoryless_breaches += part["counts"][2]
        report.progress_flags += part["counts"][3]
        for code, loc in part["first"].items():
            if code not in firsts or loc[:2] < firsts[code][:2]:
                firsts[code] = loc
    for code, (pair_index, schedule_index, choices) in sorted(firsts.items()):
        kind = _FUZZ_CODES[code]
        report.first_locator[kind] = (pair_index, schedule_index)
        if code != 3:
            assignments = _pair_assignments(pids, pairs[pair_index], m)
            report.first_witnesses[kind] = _witness_from_choices(
                programs, m, assignments, pids, choices, kind
            )
    return report


def _pair_assignments(pids, pair, m):
    """First process gets the pair's first naming, second the second; any
    further processes get the identity."""
    identity = NamingAssignment.identity(m)
    assignments = {pid: identity for pid in pids}
    assignments[pids[0]] = pair[0]
    if len(pids) > 1:
        assignments[pids[1]] = pair[1]
    return assignments


# -- remote memory references ---------------------------------------------


@dataclass
class RmrReport:
    """Cache-coherent accounting over one run.

    A read costs a remote reference unless the process holds a valid cached
    copy; a write always costs one and invalidates every other cache's copy.
    Passages are delimited by leaving and re-entering the remainder section.
    """

    totals: Dict[ProcessId, int]
    per_passage: Dict[ProcessId, List[int]]
    distinct_write_registers: Dict[ProcessId, frozenset]

    def total(self, pid: ProcessId) -> int:
        return self.totals.get(pid, 0)

    def format_lines(self) -> List[str]:
        lines = []
        for pid in sorted(self.totals, key=token_of):
            passages = ",".join(str(x) for x in self.per_passage[pid]) or "-"
            lines.append(
                f"process={token_of(pid)}\trmr-total={self.totals[pid]}\t"
                f"per-passage={passages}\t"
                f"distinct-writes={len(self.distinct_write_registers[pid])}"
            )
        return lines


def rmr_count(run: Run, upto: Optional[int] = None) -> RmrReport:
    """Count remote memory references along a run (cache-coherent model)."""
    valid: Dict[ProcessId, set] = {}
    totals: Dict[ProcessId, int] = {}
    passages: Dict[ProcessId, List[int]] = {}
    current: Dict[ProcessId, Optional[int]] = {}
    writes: Dict[ProcessId, set] = {}
    events = run.events if upto is None else run.events[:upto]
    for e in events:
        pid = e.actor
        valid.setdefault(pid, set())
        totals.setdefault(pid, 0)
        passages.setdefault(pid, [])
        writes.setdefault(pid, set())
        if current.get(pid) is None and e.kind is not EventKind.ENTER_REMAINDER:
            current[pid] = 0
        if e.kind is EventKind.READ:
            if e.physical not in valid[pid]:
                totals[pid] += 1
                current[pid] += 1
                valid[pid].add(e.physical)
        elif e.kind is EventKind.WRITE:
            totals[pid] += 1
            current[pid] += 1
            writes[pid].add(e.physical)
            for other, cache in valid.items():
                if other != pid:
                    cache.discard(e.physical)
            valid[pid].add(e.physical)
        elif e.kind is EventKind.ENTER_REMAINDER:
            passages[pid].append(current.get(pid) or 0)
            current[pid] = None
    for pid, n in current.items():
        if n is not None and n > 0:
            passages.setdefault(pid, []).append(n)
    return RmrReport(
        totals=totals,
        per_passage=passages,
        distinct_write_registers={p: frozenset(s) for p, s in writes.items()},
    )
