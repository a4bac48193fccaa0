import random

import pytest

from anonmutex import (
    Fig1Config,
    NamingAssignment,
    ProcessId,
    System,
    build_program,
)


@pytest.fixture
def pids():
    return ProcessId(1), ProcessId(2)


@pytest.fixture
def fig1_m7():
    return build_program(Fig1Config(m=7))


def random_fig1_system(seed, m=7, n=2, variant=None, allow_invalid=True):
    """A fresh system of n copies of the algorithm under random namings."""
    from anonmutex.fig1 import Variant

    rnd = random.Random(seed)
    config = Fig1Config(
        m=m,
        variant=variant or Variant.STANDARD,
        allow_invalid_m=allow_invalid,
    )
    program = build_program(config)
    processes = [ProcessId(k + 1) for k in range(n)]
    assignments = {}
    for pid in processes:
        table = list(range(1, m + 1))
        rnd.shuffle(table)
        assignments[pid] = NamingAssignment(table)
    return System({p: program for p in processes}, m, assignments), processes, rnd


def random_fig1_run(seed, m=7, n=2, steps=120, variant=None):
    """Drive a random schedule and return the resulting run."""
    system, processes, rnd = random_fig1_system(seed, m=m, n=n, variant=variant)
    for _ in range(steps):
        system.step(processes[rnd.randrange(n)])
    return system
