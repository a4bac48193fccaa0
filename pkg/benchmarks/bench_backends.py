"""Compare the compiled stepping kernel against the pure-Python fallback.

Times three workloads per backend: raw single steps, whole fuzz schedules,
and breadth-first exploration.  Also times the model layer (the readable
reference implementation) on the stepping workload for scale.

Usage: python benchmarks/bench_backends.py [--m 7] [--steps 2000000]
"""

import argparse
import time

from anonmutex import NamingAssignment, ProcessId, System
from anonmutex.engine import available_backends
from anonmutex.fig1 import Fig1Config, build_program


def bench_steps(kernel_cls, m, tables, steps):
    kern = kernel_cls(m, [1, 2], tables, True, 2)
    kern.reset()
    start = time.perf_counter()
    n = 0
    while n < steps:
        kern.step(n & 1)
        n += 1
    return steps / (time.perf_counter() - start)


def bench_fuzz(backend, m, tables, schedules, steps_each):
    kern = backend.Fig1Kernel(m, [1, 2], tables, True, 2)
    start = time.perf_counter()
    for i in range(schedules):
        kern.fuzz_schedule(backend.schedule_seed(1, 0, i), steps_each, 6, 7, 8, steps_each)
    return schedules * steps_each / (time.perf_counter() - start)


def bench_explore(backend, m, tables, cap):
    kern = backend.Fig1Kernel(m, [1, 2], tables, True, 2)
    start = time.perf_counter()
    result = kern.explore(cap, 0)
    elapsed = time.perf_counter() - start
    return len(result[1]) / elapsed, len(result[1])


def bench_model_layer(m, tables, steps):
    program = build_program(Fig1Config(m=m))
    p1, p2 = ProcessId(1), ProcessId(2)
    system = System(
        {p1: program, p2: program}, m,
        {p1: NamingAssignment(tables[0]), p2: NamingAssignment(tables[1])},
    )
    pids = (p1, p2)
    start = time.perf_counter()
    for n in range(steps):
        system.step(pids[n & 1])
    return steps / (time.perf_counter() - start)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--m", type=int, default=7)
    parser.add_argument("--steps", type=int, default=2_000_000)
    parser.add_argument("--schedules", type=int, default=200)
    parser.add_argument("--explore-cap", type=int, default=300_000)
    args = parser.parse_args()

    m = args.m
    tables = [list(range(1, m + 1)), list(range(m, 0, -1))]
    backends = available_backends()
    print(f"m={m}; backends: {', '.join(sorted(backends))}")
    print(f"{'workload':<22}{'backend':<12}{'rate':>18}")

    rates = {}
    for name in sorted(backends):
        step_budget = args.steps if name == "compiled" else args.steps // 20
        rate = bench_steps(backends[name].Fig1Kernel, m, tables, step_budget)
        rates[("steps", name)] = rate
        print(f"{'single steps':<22}{name:<12}{rate/1e6:>14.2f} M/s")
    model_rate = bench_model_layer(m, tables, 40_000)
    print(f"{'single steps':<22}{'model layer':<12}{model_rate/1e6:>14.2f} M/s")

    for name in sorted(backends):
        scheds = args.schedules if name == "compiled" else max(2, args.schedules // 50)
        rate = bench_fuzz(backends[name], m, tables, scheds, 10_000)
        rates[("fuzz", name)] = rate
        print(f"{'fuzz schedules':<22}{name:<12}{rate/1e6:>14.2f} M steps/s")

    for name in sorted(backends):
        cap = args.explore_cap if name == "compiled" else args.explore_cap // 10
        rate, states = bench_explore(backends[name], m, tables, cap)
        rates[("explore", name)] = rate
        print(f"{'exploration':<22}{name:<12}{rate/1e3:>14.1f} K states/s  ({states} states)")

    if len(backends) == 2:
        print("\nspeedup compiled/pure:")
        for workload in ("steps", "fuzz", "explore"):
            ratio = rates[(workload, "compiled")] / rates[(workload, "pure")]
            print(f"  {workload:<10}{ratio:>8.1f}x")


if __name__ == "__main__":
    main()
