import pytest

from anonmutex.errors import ScenarioError
from anonmutex.scenario import parse_scenario, run_scenario, scenario_text_from_run
from anonmutex.scenarios import load, shipped_names


class TestShippedScenarios:
    def test_all_four_ship(self):
        assert shipped_names() == [
            "m5-counterexample",
            "race-condition",
            "race-condition-guarded",
            "two-waiting-registers",
        ]

    def test_m5_counterexample_violates(self):
        result = run_scenario(parse_scenario(load("m5-counterexample"), "m5"))
        assert result.ok and result.mutex_violated

    def test_race_condition_violates_without_the_gate(self):
        result = run_scenario(parse_scenario(load("race-condition"), "race"))
        assert result.ok and result.mutex_violated

    def test_guarded_prefix_stays_exclusive(self):
        result = run_scenario(parse_scenario(load("race-condition-guarded"), "guarded"))
        assert result.ok and not result.mutex_violated

    def test_one_waiting_mark_survives(self):
        from anonmutex import replay

        result = run_scenario(parse_scenario(load("two-waiting-registers"), "tw"))
        assert result.ok
        final = replay(result.run)
        assert sum(1 for v in final.memory.values if v.is_waiting) == 1


class TestDivergence:
    def test_wrong_step_reports_position(self):
        text = """
m 7
proc a fig1
assign a identity
step a write 1
"""
        with pytest.raises(ScenarioError) as err:
            run_scenario(parse_scenario(text, "bad"))
        assert err.value.step_index == 0  # first event is the gate read, not a write

    def test_until_runs_through_a_whole_passage(self):
        text = """
m 7
proc a fig1
assign a identity
until a exit-cs
step a exit-cs
until a enter-remainder
step a enter-remainder
expect section a remainder
"""
        result = run_scenario(parse_scenario(text, "solo"))
        assert result.ok

    def test_until_reports_unreachable_target(self):
        text = """
m 3
proc a fig1
assign a identity
allow-invalid-m
until a write 2
"""
        # the solo process claims one register and then loses forever at
        # m=3; it never writes a second distinct register
        with pytest.raises(ScenarioError):
            run_scenario(parse_scenario(text, "stuck"))

    def test_unknown_directive(self):
        with pytest.raises(ScenarioError):
            parse_scenario("m 7\nfrobnicate a b\n", "x")

    def test_missing_assignment(self):
        with pytest.raises(ScenarioError):
            parse_scenario("m 7\nproc a fig1\n", "x")


class TestEmission:
    def test_emitted_text_replays(self, fig1_m7):
        from conftest import random_fig1_system
        system, procs, rnd = random_fig1_system(5, m=7)
        for _ in range(120):
            system.step(procs[rnd.randrange(2)])
        run = system.run_so_far()
        text = scenario_text_from_run(
            run, {p: "fig1" for p in procs}, 7, False, ["no-violation"]
        )
        result = run_scenario(parse_scenario(text, "emitted"))
        assert result.ok
        assert result.steps_executed == len(run.events)
