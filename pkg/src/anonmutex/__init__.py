"""Anonymous-register mutual exclusion: simulator, model checker, and
adversarial schedule constructors.

The shared memory consists of registers with no global names; each process
reaches them through its own private index permutation, all processes run
the same code, and identifiers support equality only.  The package ships the
two-process starvation-free algorithm family, bounded exhaustive exploration
and fair-schedule fuzzing over it, and the run-manipulation adversaries
(register renaming, lock-step symmetry, write hiding).
"""

from .checker import (
    EnumerateRelative,
    ExplorationLimits,
    FixedPair,
    FuzzReport,
    PropertyReport,
    RmrReport,
    SampleRelative,
    Verdict,
    Witness,
    check_deadlock_freedom,
    check_memoryless,
    check_mutual_exclusion,
    check_starvation_freedom,
    explore,
    fuzz_schedules,
    rmr_count,
)
from .adversary import (
    EvenMDriveResult,
    HidingReport,
    PairingTable,
    QuiescentRegistry,
    SymmetricRunResult,
    build_pairing,
    even_m_drive,
    hiding_drive,
    hiding_drive_multi_quiescent,
    lockstep_construct,
)
from .fig1 import Fig1Config, Fig1Program, Variant, build_named, build_program, line_map
from .framework import (
    Action,
    ActionKind,
    ProcessDriver,
    ProcessProgram,
    relabel_ids,
    run_solo,
    step,
)
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
    validate_run,
)
from .naming import NamingAssignment, swap_naming
from .sim import System, replay_choices
from .predicates import (
    erase_process,
    extend_run,
    is_hidden,
    is_overwritten,
    is_symmetric_state,
    looks_like,
    swap_run,
)
from .values import FREE, WAITING, ProcessId, RegisterValue, owned

__version__ = "0.1.0"
