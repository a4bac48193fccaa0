import itertools

from anonmutex import (
    EnumerateRelative,
    ExplorationLimits,
    FixedPair,
    NamingAssignment,
    ProcessId,
    SampleRelative,
    check_deadlock_freedom,
    check_memoryless,
    check_mutual_exclusion,
    check_starvation_freedom,
    explore,
    fuzz_schedules,
)
from anonmutex.checker import permutation_pairs
from anonmutex.fig1 import Fig1Config, build_program

from toys import FrozenProgram, LeakyProgram, SpinProgram

P1, P2 = ProcessId(1), ProcessId(2)
ID7, REV7 = NamingAssignment.identity(7), NamingAssignment.reverse(7)


def explore_fig1(m, max_states=400_000, allow_invalid=True):
    prog = build_program(Fig1Config(m=m, allow_invalid_m=allow_invalid))
    assignments = {P1: NamingAssignment.identity(m), P2: NamingAssignment.reverse(m)}
    return explore(
        {P1: prog, P2: prog}, m, assignments, ExplorationLimits(max_states=max_states)
    ), prog


class TestExplore:
    def test_solo_passage_is_a_simple_cycle(self, fig1_m7):
        graph = explore({P1: fig1_m7}, 7, {P1: ID7}, ExplorationLimits(max_states=1000))
        assert graph.complete
        assert graph.n_states == 84
        assert len(graph.edges_src) == 84
        # every state has exactly one successor and the cycle closes
        assert sorted(graph.edges_src) == list(range(84))
        assert 0 in set(graph.edges_dst)

    def test_two_frozen_processes_make_one_state(self):
        frozen = FrozenProgram()
        graph = explore(
            {P1: frozen, P2: frozen}, 7, {P1: ID7, P2: REV7},
            ExplorationLimits(max_states=10),
        )
        assert graph.complete and graph.n_states == 1 and len(graph.edges_src) == 0

    def test_truncation_is_flagged(self, fig1_m7):
        graph = explore(
            {P1: fig1_m7, P2: fig1_m7}, 7, {P1: ID7, P2: REV7},
            ExplorationLimits(max_states=500),
        )
        assert not graph.complete
        assert graph.n_states == 500

    def test_depth_cap(self, fig1_m7):
        graph = explore(
            {P1: fig1_m7, P2: fig1_m7}, 7, {P1: ID7, P2: REV7},
            ExplorationLimits(max_states=100000, max_depth=6),
        )
        assert not graph.complete


class TestMutualExclusion:
    def test_m5_schedule_reaches_violation(self):
        graph, prog = explore_fig1(5, max_states=120_000)
        report = check_mutual_exclusion(graph)
        assert report.verdict.kind == "violated"
        witness = report.verdict.witness
        assert witness.kind == "mutex-violation"
        # the witness already validated itself at construction; check shape
        assert len(witness.details["processes"]) == 2

    def test_bounded_m7_within_small_caps(self, fig1_m7):
        graph = explore(
            {P1: fig1_m7, P2: fig1_m7}, 7, {P1: ID7, P2: REV7},
            ExplorationLimits(max_states=100_000),
        )
        assert check_mutual_exclusion(graph).verdict.kind == "holds"

    def test_gateless_race_reachable_by_exploration(self):
        """The returning-winner race of the gateless variant is found by
        plain breadth-first search, independently of the scripted scenario;
        the minimal witness has the same length as the scripted one."""
        from anonmutex.fig1 import Variant
        prog = build_program(Fig1Config(m=7, variant=Variant.NO_PRIORITY_GATE))
        graph = explore(
            {P1: prog, P2: prog}, 7, {P1: ID7, P2: REV7},
            ExplorationLimits(max_states=4_000_000),
        )
        report = check_mutual_exclusion(graph)
        assert report.verdict.kind == "violated"
        assert len(report.verdict.witness.run.events) == 171

    def test_violations_persist_in_supergraphs(self):
        # monotone: a violation found under a small cap is still found
        # under any larger cap
        small, _ = explore_fig1(5, max_states=80_000)
        large, _ = explore_fig1(5, max_states=160_000)
        assert check_mutual_exclusion(small).verdict.kind == "violated"
        assert check_mutual_exclusion(large).verdict.kind == "violated"


class TestLiveness:
    def test_spinners_starve_and_deadlock(self):
        spin = SpinProgram()
        graph = explore(
            {P1: spin, P2: spin}, 3,
            {P1: NamingAssignment.identity(3), P2: NamingAssignment.identity(3)},
            ExplorationLimits(max_states=100),
        )
        assert graph.complete
        starvation = check_starvation_freedom(graph)
        deadlock = check_deadlock_freedom(graph)
        assert starvation.verdict.kind == "violated"
        assert starvation.verdict.witness.kind == "starvation-lasso"
        assert deadlock.verdict.kind == "violated"

    def test_truncated_graph_is_inconclusive(self, fig1_m7):
        graph = explore(
            {P1: fig1_m7, P2: fig1_m7}, 7, {P1: ID7, P2: REV7},
            ExplorationLimits(max_states=2000),
        )
        assert check_starvation_freedom(graph).verdict.kind == "inconclusive"
        assert check_deadlock_freedom(graph).verdict.kind == "inconclusive"

    def test_vacuous_systems_hold(self):
        frozen = FrozenProgram()
        graph = explore(
            {P1: frozen, P2: frozen}, 3,
            {P1: NamingAssignment.identity(3), P2: NamingAssignment.identity(3)},
            ExplorationLimits(max_states=10),
        )
        assert check_deadlock_freedom(graph).verdict.kind == "holds"
        assert check_starvation_freedom(graph).verdict.kind == "holds"


class TestMemoryless:
    def test_leaky_program_breaches(self):
        leaky = LeakyProgram()
        graph = explore(
            {P1: leaky, P2: leaky}, 3,
            {P1: NamingAssignment.identity(3), P2: NamingAssignment.reverse(3)},
            ExplorationLimits(max_states=10_000),
        )
        report = check_memoryless(graph)
        assert report.verdict.kind == "violated"
        assert report.extra["quiescent_count"] > 1

    def test_fig1_single_quiescent_state(self, fig1_m7):
        graph = explore(
            {P1: fig1_m7, P2: fig1_m7}, 7, {P1: ID7, P2: REV7},
            ExplorationLimits(max_states=50_000),
        )
        report = check_memoryless(graph)
        assert report.verdict.kind == "holds"
        assert report.extra["quiescent_count"] == 1

    def test_frozen_trivially_holds(self):
        frozen = FrozenProgram()
        graph = explore(
            {P1: frozen, P2: frozen}, 3,
            {P1: NamingAssignment.identity(3), P2: NamingAssignment.identity(3)},
            ExplorationLimits(max_states=10),
        )
        assert check_memoryless(graph).verdict.kind == "holds"


class TestPermutationCanonicality:
    def test_relative_enumeration_covers_all_pairs_m3(self):
        """Fixing the first process to the identity loses nothing: the set of
        verdict signatures over all 36 naming pairs equals the set over the
        6 relative ones."""
        prog = build_program(Fig1Config(m=3, allow_invalid_m=True))

        def verdicts(pi_a, pi_b):
            graph = explore(
                {P1: prog, P2: prog}, 3, {P1: pi_a, P2: pi_b},
                ExplorationLimits(max_states=400_000),
            )
            assert graph.complete
            return (
                check_mutual_exclusion(graph).verdict.kind,
                check_memoryless(graph).verdict.kind,
                check_deadlock_freedom(graph).verdict.kind,
                check_starvation_freedom(graph).verdict.kind,
            )

        perms = [NamingAssignment(p) for p in itertools.permutations((1, 2, 3))]
        full = {verdicts(a, b) for a in perms for b in perms}
        relative = {verdicts(NamingAssignment.identity(3), b) for b in perms}
        assert full == relative


class TestPermutationModes:
    def test_fixed_pair(self):
        pairs = permutation_pairs(FixedPair(), 5)
        assert pairs == [(NamingAssignment.identity(5), NamingAssignment.reverse(5))]

    def test_enumerate(self):
        pairs = permutation_pairs(EnumerateRelative(), 3)
        assert len(pairs) == 6
        assert all(a == NamingAssignment.identity(3) for a, _ in pairs)

    def test_sample_is_seeded_and_includes_reverse(self):
        a = permutation_pairs(SampleRelative(8, 99), 7)
        b = permutation_pairs(SampleRelative(8, 99), 7)
        assert a == b
        assert len(a) == 9
        assert a[0][1] == NamingAssignment.reverse(7)


class TestFuzz:
    def test_clean_campaign_m7(self, fig1_m7):
        report = fuzz_schedules(
            {P1: fig1_m7, P2: fig1_m7}, 7, FixedPair(), 40, 4000, seed=5
        )
        assert report.clean
        assert report.schedules_run == 40

    def test_m5_campaign_finds_the_counterexample(self):
        prog = build_program(Fig1Config(m=5, allow_invalid_m=True))
        report = fuzz_schedules({P1: prog, P2: prog}, 5, FixedPair(), 200, 4000, seed=7)
        assert report.mutex_violations > 0
        witness = report.first_witnesses["mutex-violation"]
        assert witness.kind == "mutex-violation"

    def test_fixed_seed_reproduces_bitwise(self, fig1_m7):
        a = fuzz_schedules({P1: fig1_m7, P2: fig1_m7}, 7, FixedPair(), 30, 2000, seed=9)
        b = fuzz_schedules({P1: fig1_m7, P2: fig1_m7}, 7, FixedPair(), 30, 2000, seed=9)
        assert a.format_lines() == b.format_lines()

    def test_worker_sharding_is_transparent(self, fig1_m7):
        mode = SampleRelative(5, 31)
        one = fuzz_schedules({P1: fig1_m7, P2: fig1_m7}, 7, mode, 60, 1500, seed=3)
        two = fuzz_schedules({P1: fig1_m7, P2: fig1_m7}, 7, mode, 60, 1500, seed=3,
                             workers=2)
        assert one.format_lines() == two.format_lines()

    def test_generic_engine_agrees_with_kernel(self, fig1_m7):
        """The model-layer fuzzer and the kernel fuzzer draw identical
        schedules and reach identical verdicts."""
        from anonmutex.checker import _generic_fuzz_schedule, _make_kernel, _pair_assignments
        from anonmutex import engine

        pids = [P1, P2]
        prog5 = build_program(Fig1Config(m=5, allow_invalid_m=True))
        assignments = _pair_assignments(
            pids, (NamingAssignment.identity(5), NamingAssignment.reverse(5)), 5
        )
        kern = _make_kernel({P1: prog5, P2: prog5}, 5, assignments, pids)
        for i in range(25):
            seed = engine.schedule_seed(11, 0, i)
            got_kernel = kern.fuzz_schedule(seed, 1200, 6, 7, 8, 1200)
            got_generic = _generic_fuzz_schedule(
                {P1: prog5, P2: prog5}, 5, assignments, pids, seed, 1200, 6, 7, 8, 1200
            )
            assert got_kernel == got_generic

    def test_spin_program_flags_progress(self):
        spin = SpinProgram()
        report = fuzz_schedules(
            {P1: spin, P2: spin}, 3, FixedPair(), 4, 600, seed=1, progress_cap=200
        )
        assert report.progress_flags == 4
