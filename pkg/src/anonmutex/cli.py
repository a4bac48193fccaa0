"""Command-line interface.

Subcommands: ``check`` (exploration-based property checks plus an optional
fuzz campaign), ``scenario`` (replay a scripted interleaving), ``adversary``
(the lock-step, even-register, and hiding drives), and ``rmr`` (remote
memory reference accounting).  Exit codes: 0 success / all properties hold,
1 violation or unmet expectation, 2 inconclusive, 64 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .adversary import build_pairing, even_m_drive, hiding_drive, lockstep_construct
from .checker import (
    EnumerateRelative,
    ExplorationLimits,
    FixedPair,
    SampleRelative,
    Witness,
    check_all,
    explore,
    fuzz_schedules,
    permutation_pairs,
    rmr_count,
)
from .errors import AnonMutexError, ConfigError, ScenarioError
from .fig1 import PROGRAM_VARIANTS, build_named
from .framework import run_solo
from .model import new_memory
from .naming import NamingAssignment
from .runio import run_to_text
from .scenario import parse_scenario, run_scenario, scenario_text_from_run
from .scenarios import load as load_shipped, shipped_names
from .values import ProcessId, token_of

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64


def _parse_perm(text: str):
    if text == "fixed":
        return FixedPair()
    if text == "enumerate":
        return EnumerateRelative()
    if text.startswith("sample:"):
        parts = text.split(":")
        if len(parts) == 3 and parts[1].isdigit():
            seed = parts[2]
            seed_val = int(seed[4:]) if seed.startswith("seed") else int(seed)
            return SampleRelative(int(parts[1]), seed_val)
    raise ConfigError(f"bad permutation mode {text!r} (fixed | enumerate | sample:N:seedS)")


def _resolve_program(args):
    name = args.program
    if getattr(args, "variant", None):
        variant_name = {"standard": "fig1", "no-gate": "fig1-no-gate",
                        "one-reserved": "fig1-one-reserved"}[args.variant]
        name = variant_name
    return name, build_named(name, args.m, args.allow_invalid_m)


def _write_out(path: str, text: str):
    Path(path).write_text(text)


def cmd_check(args) -> int:
    name, program = _resolve_program(args)
    mode = _parse_perm(args.perm)
    pids = (ProcessId(1), ProcessId(2))
    programs = {pids[0]: program, pids[1]: program}
    limits = ExplorationLimits(max_states=args.max_states, max_depth=args.max_depth)
    pairs = permutation_pairs(mode, args.m)
    worst = {}
    reports_by_property = {}
    first_witness = None
    for pair_index, pair in enumerate(pairs):
        assignments = {pids[0]: pair[0], pids[1]: pair[1]}
        graph = explore(programs, args.m, assignments, limits)
        for report in check_all(graph):
            prev = worst.get(report.property, "holds")
            rank = {"holds": 0, "inconclusive": 1, "violated": 2}
            if rank[report.verdict.kind] >= rank[prev]:
                worst[report.property] = report.verdict.kind
                reports_by_property[report.property] = (pair_index, report)
            if report.verdict.kind == "violated" and first_witness is None:
                first_witness = (report, pair_index)
                print(f"violation\tproperty={report.property}\tpair={pair_index}")
    for prop in ("mutex", "deadlock-free", "starvation-free", "memoryless"):
        pair_index, report = reports_by_property[prop]
        suffix = f"\tworst-pair={pair_index}" if len(pairs) > 1 else ""
        print(report.format_line() + f"\tpairs={len(pairs)}" + suffix)

    if args.schedules:
        fuzz = fuzz_schedules(
            programs, args.m, mode, args.schedules, args.steps, args.seed,
            workers=args.workers,
        )
        for line in fuzz.format_lines():
            print("fuzz\t" + line)
        if not fuzz.clean:
            worst["fuzz"] = "violated"
            if first_witness is None and fuzz.first_witnesses:
                kind, witness = sorted(fuzz.first_witnesses.items())[0]
                first_witness = (witness, -1)

    if args.out and first_witness is not None:
        item = first_witness[0]
        witness = item.verdict.witness if hasattr(item, "verdict") else item
        _emit_witness(args.out, witness, {p: name for p in pids}, args)
        print(f"witness written to {args.out}")

    kinds = set(worst.values())
    if "violated" in kinds:
        return EXIT_VIOLATION
    if "inconclusive" in kinds:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _emit_witness(path, witness: Witness, program_names, args):
    expectations = {
        "mutex-violation": ["mutex-violated"],
        "memoryless-breach": ["no-violation"],
        "starvation-lasso": ["no-violation"],
        "deadlock-cycle": ["no-violation"],
    }[witness.kind]
    if witness.kind == "starvation-lasso":
        starved = witness.details["starved"]
        expectations.append(f"section p{token_of(starved)} entry")
    text = scenario_text_from_run(
        witness.run,
        {p: program_names[p] for p in witness.run.assignments if p in program_names},
        args.m,
        args.allow_invalid_m,
        expectations,
        title=f"witness: {witness.kind}",
    )
    _write_out(path, text)


def cmd_scenario(args) -> int:
    source = args.scenario
    if Path(source).exists():
        text = Path(source).read_text()
        name = Path(source).stem
    elif source in shipped_names():
        text = load_shipped(source)
        name = source
    else:
        print(f"scenario {source!r} not found (shipped: {', '.join(shipped_names())})",
              file=sys.stderr)
        return EXIT_USAGE
    scenario = parse_scenario(text, name)
    try:
        result = run_scenario(scenario)
    except ScenarioError as exc:
        print(f"divergence\t{exc}", file=sys.stderr)
        return EXIT_VIOLATION
    print(f"scenario={name}\tsteps={result.steps_executed}\t"
          f"mutex-violated={'yes' if result.mutex_violated else 'no'}")
    for failure in result.failures:
        print(f"unmet-expectation\t{failure}")
    if args.out:
        _write_out(args.out, run_to_text(result.run))
        print(f"trace written to {args.out}")
    return EXIT_OK if result.ok else EXIT_VIOLATION


def cmd_adversary(args) -> int:
    name, program = _resolve_program(args)
    if args.mode == "lockstep":
        if args.m % 2 == 0:
            raise ConfigError("lockstep requires an odd register count")
        result = lockstep_construct(program, args.m, step_cap=args.step_cap)
        print("pairing:")
        for line in build_pairing(args.m).format_lines()[:1]:
            print("  " + line)
        for line in result.format_lines():
            print(line)
        if args.out:
            _write_out(args.out, run_to_text(result.run))
            print(f"run written to {args.out}")
        return EXIT_OK
    if args.mode == "even-m":
        if args.m % 2 == 1:
            raise ConfigError("the even-m drive requires an even register count")
        result = even_m_drive(program, args.m, step_cap=args.step_cap)
        for line in result.format_lines():
            print(line)
        if args.out and result.witness is not None:
            _emit_witness(args.out, result.witness, _two_names(name), args)
            print(f"witness written to {args.out}")
        if result.outcome == "inconclusive":
            return EXIT_INCONCLUSIVE
        return EXIT_OK if result.outcome == "deadlock-cycle" else EXIT_VIOLATION
    # hiding
    if args.m % 2 == 0:
        raise ConfigError("the hiding drive requires an odd register count")
    pids = (ProcessId(1), ProcessId(2), ProcessId(3))
    programs = {p: program for p in pids}
    report = hiding_drive(programs, pids[0], pids[1], pids[2], args.m, args.cycles)
    for line in report.format_lines():
        print(line)
    if args.out:
        if report.violation_witness is not None:
            _emit_witness(args.out, report.violation_witness,
                          {p: name for p in pids}, args)
        else:
            _write_out(args.out, run_to_text(report.run))
        print(f"output written to {args.out}")
    return EXIT_OK


def _two_names(name):
    return {ProcessId(1): name, ProcessId(2): name}


def cmd_rmr(args) -> int:
    name, program = _resolve_program(args)
    if args.mode == "solo":
        pid = ProcessId(1)
        result = run_solo(program, pid, new_memory(args.m),
                          NamingAssignment.identity(args.m), step_cap=1_000_000)
        if not result.completed:
            print("solo passage did not complete", file=sys.stderr)
            return EXIT_INCONCLUSIVE
        report = rmr_count(result.run)
        for line in report.format_lines():
            print(line)
        print(f"total={report.total(pid)}")
        return EXIT_OK
    if args.m % 2 == 0:
        raise ConfigError("contended accounting uses the lock-step run (odd m)")
    construction = lockstep_construct(program, args.m, step_cap=args.step_cap)
    report = rmr_count(construction.run)
    for line in report.format_lines():
        print(line)
    for pid in sorted(construction.construction_write_sets, key=token_of):
        count = len(construction.construction_write_sets[pid])
        print(f"process={token_of(pid)}\tcontended-distinct-writes={count}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anonmutex",
        description="Simulate, check, and adversarially schedule symmetric "
                    "mutual exclusion over anonymous shared registers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_program_flags(p):
        p.add_argument("--program", default="fig1", choices=sorted(PROGRAM_VARIANTS))
        p.add_argument("--variant", choices=["standard", "no-gate", "one-reserved"])
        p.add_argument("--m", type=int, required=True, help="register count")
        p.add_argument("--allow-invalid-m", action="store_true")

    check = sub.add_parser("check", help="explore the interleaving graph and check properties")
    add_program_flags(check)
    check.add_argument("--perm", default="fixed",
                       help="naming coverage: fixed | enumerate | sample:N:seedS")
    check.add_argument("--max-states", type=int, default=1_000_000)
    check.add_argument("--max-depth", type=int, default=0)
    check.add_argument("--schedules", type=int, default=0,
                       help="also run this many random fair schedules")
    check.add_argument("--steps", type=int, default=10_000)
    check.add_argument("--seed", type=int, default=42)
    check.add_argument("--workers", type=int, default=1)
    check.add_argument("--out", help="write the first violation witness as a scenario file")
    check.set_defaults(func=cmd_check)

    scen = sub.add_parser("scenario", help="replay a scenario file (or a shipped one)")
    scen.add_argument("scenario", help=f"path or one of: {', '.join(shipped_names())}")
    scen.add_argument("--out", help="write the resulting run trace")
    scen.set_defaults(func=cmd_scenario)

    adv = sub.add_parser("adversary", help="run an adversarial schedule constructor")
    adv.add_argument("mode", choices=["lockstep", "even-m", "hiding"])
    add_program_flags(adv)
    adv.add_argument("--cycles", type=int, default=10)
    adv.add_argument("--step-cap", type=int, default=200_000)
    adv.add_argument("--out", help="write the resulting run or witness")
    adv.set_defaults(func=cmd_adversary)

    rmr = sub.add_parser("rmr", help="remote-memory-reference accounting")
    add_program_flags(rmr)
    rmr.add_argument("--mode", choices=["solo", "contended"], default="solo")
    rmr.add_argument("--step-cap", type=int, default=200_000)
    rmr.set_defaults(func=cmd_rmr)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except AnonMutexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
