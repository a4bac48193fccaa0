"""The two-process symmetric memoryless starvation-free mutex algorithm.

Expressed as a step machine: one shared-register access per step, with all
local computation folded into the adjacent step.  Scans over the register
array unroll to one read per register, so waiting loops stay schedulable.

Two deliberately weakened variants ship alongside the standard program:
``no-gate`` drops the priority gate that protects a waiting process from a
returning winner, and ``one-reserved`` keeps only a single register marked
waiting instead of two.  Both exist to replay the classic failure scenarios.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Mapping, Optional

from .errors import ConfigError, ProtocolError
from .framework import Action, ActionKind, ProcessProgram
from .values import FREE, WAITING, ProcessId, RegisterValue, owned

LOC_REMAINDER = "remainder"
LOC_SCAN_FOR_ZERO = "scan-for-zero"
LOC_CLAIM_FIRST = "claim-first"
LOC_GATE_VIEW_SCAN = "gate-view-scan"
LOC_GATE_RELEASE_CHECK = "gate-release-check"
LOC_GATE_RELEASE_WRITE = "gate-release-write"
LOC_GATE_WAIT_SCAN = "gate-wait-scan"
LOC_PROBE_FREE = "probe-free"
LOC_OWN_VIEW_SCAN = "own-view-scan"
LOC_OWN_WRITE = "own-write"
LOC_TALLY_SCAN = "tally-scan"
LOC_LOSER_RELEASE_PROBE = "loser-release-probe"
LOC_RELEASE_EXTRA = "release-extra-register"
LOC_SIGNAL_WAITING = "signal-waiting"
LOC_WAIT_SCAN = "wait-scan"
LOC_ENTER_CS = "enter-cs"
LOC_IN_CS = "critical-section"
LOC_RELEASE_WAITER_PROBE = "release-after-cs-waiter-probe"
LOC_RELEASE_WAITER = "release-after-cs-waiter"
LOC_RELEASE_WINNER_PROBE = "release-after-cs-winner-probe"
LOC_RELEASE_WINNER = "release-after-cs-winner"
LOC_RESET = "reset-locals"

_LINE_MAP = {
    LOC_SCAN_FOR_ZERO: 1,
    LOC_CLAIM_FIRST: 2,
    LOC_GATE_VIEW_SCAN: 3,
    LOC_GATE_RELEASE_CHECK: 5,
    LOC_GATE_RELEASE_WRITE: 5,
    LOC_GATE_WAIT_SCAN: 7,
    LOC_PROBE_FREE: 12,
    LOC_OWN_VIEW_SCAN: 13,
    LOC_OWN_WRITE: 15,
    LOC_TALLY_SCAN: 17,
    LOC_LOSER_RELEASE_PROBE: 20,
    LOC_RELEASE_EXTRA: 21,
    LOC_SIGNAL_WAITING: 22,
    LOC_WAIT_SCAN: 25,
    LOC_ENTER_CS: 30,
    LOC_IN_CS: 30,
    LOC_RELEASE_WAITER_PROBE: 31,
    LOC_RELEASE_WAITER: 31,
    LOC_RELEASE_WINNER_PROBE: 32,
    LOC_RELEASE_WINNER: 32,
    LOC_RESET: 34,
}

_GATE_LOCATIONS = frozenset({
    LOC_SCAN_FOR_ZERO, LOC_CLAIM_FIRST, LOC_GATE_VIEW_SCAN,
    LOC_GATE_RELEASE_CHECK, LOC_GATE_RELEASE_WRITE, LOC_GATE_WAIT_SCAN,
})


class Variant(enum.Enum):
    STANDARD = "standard"
    NO_PRIORITY_GATE = "no-gate"
    ONE_RESERVED_REGISTER = "one-reserved"


@dataclass(frozen=True)
class Fig1Config:
    """Register count and variant selection.

    The standard program requires an odd register count of at least seven;
    ``allow_invalid_m`` overrides that check so the known failure sizes can
    be instantiated for replay.
    """

    m: int
    variant: Variant = Variant.STANDARD
    allow_invalid_m: bool = False


@dataclass(frozen=True)
class Fig1Local:
    """Local variables: the view array, two loop indices, counter, go flag."""

    me: ProcessId
    loc: str
    counter: int
    j: int
    k: int
    mygo: bool
    view: tuple

    def key(self):
        return (self.loc, self.counter, self.j, self.k, self.mygo, self.view)

    def symmetry_items(self):
        return (
            ("location", self.loc),
            ("own-id", self.me),
            ("mycounter", self.counter),
            ("j", self.j),
            ("k", self.k),
            ("mygo", self.mygo),
            ("myview", self.view),
        )

    def relabel(self, bijection):
        def map_value(v):
            if isinstance(v, RegisterValue) and v.is_owned and v.owner in bijection:
                return owned(bijection[v.owner])
            return v

        return replace(
            self,
            me=bijection.get(self.me, self.me),
            view=tuple(map_value(v) for v in self.view),
        )


class Fig1Program(ProcessProgram):
    """Step machine for the two-process algorithm and its variants."""

    def __init__(self, config: Fig1Config):
        m = config.m
        if m < 3:
            raise ConfigError(f"register count {m} is below the minimum of 3")
        if not config.allow_invalid_m and (m % 2 == 0 or m < 7):
            raise ConfigError(
                f"register count {m} must be odd and at least 7 "
                "(pass allow_invalid_m to build anyway)"
            )
        self.config = config
        self.m = m
        self.variant = config.variant
        self.own_target = m - 2
        self.lose_threshold = (m + 1) // 2
        self.reserve = 1 if config.variant is Variant.ONE_RESERVED_REGISTER else 2
        self.gate = config.variant is not Variant.NO_PRIORITY_GATE
        self.name = {
            Variant.STANDARD: "fig1",
            Variant.NO_PRIORITY_GATE: "fig1-no-gate",
            Variant.ONE_RESERVED_REGISTER: "fig1-one-reserved",
        }[config.variant]

    def initial_local(self, pid: ProcessId, m: int) -> Fig1Local:
        if m != self.m:
            raise ConfigError(f"program built for m={self.m}, asked for m={m}")
        return Fig1Local(pid, LOC_REMAINDER, 0, 0, 0, False, (FREE,) * m)

    def begin_entry(self, local: Fig1Local) -> Fig1Local:
        if local.loc != LOC_REMAINDER:
            raise ProtocolError("begin-entry signalled outside the remainder section")
        start = LOC_SCAN_FOR_ZERO if self.gate else LOC_PROBE_FREE
        return replace(local, loc=start)

    # -- pending action ----------------------------------------------------

    def next_action(self, local: Fig1Local) -> Action:
        loc = local.loc
        if loc == LOC_REMAINDER:
            return Action(ActionKind.STAY_REMAINDER)
        if loc == LOC_SCAN_FOR_ZERO:
            return Action(ActionKind.READ_REG, local.counter % self.m + 1)
        if loc == LOC_CLAIM_FIRST:
            return Action(ActionKind.WRITE_REG, local.counter, owned(local.me))
        if loc in (LOC_GATE_VIEW_SCAN, LOC_GATE_WAIT_SCAN, LOC_OWN_VIEW_SCAN,
                   LOC_TALLY_SCAN, LOC_WAIT_SCAN, LOC_LOSER_RELEASE_PROBE,
                   LOC_RELEASE_WAITER_PROBE, LOC_RELEASE_WINNER_PROBE):
            return Action(ActionKind.READ_REG, local.j + 1)
        if loc == LOC_GATE_RELEASE_CHECK:
            return Action(ActionKind.READ_REG, local.counter)
        if loc == LOC_GATE_RELEASE_WRITE:
            return Action(ActionKind.WRITE_REG, local.counter, FREE)
        if loc == LOC_PROBE_FREE:
            return Action(ActionKind.READ_REG, local.k + 1)
        if loc == LOC_OWN_WRITE:
            return Action(ActionKind.WRITE_REG, local.k, owned(local.me))
        if loc == LOC_RELEASE_EXTRA:
            return Action(ActionKind.WRITE_REG, local.j, FREE)
        if loc == LOC_SIGNAL_WAITING:
            return Action(ActionKind.WRITE_REG, local.j, WAITING)
        if loc in (LOC_RELEASE_WAITER, LOC_RELEASE_WINNER):
            return Action(ActionKind.WRITE_REG, local.j, FREE)
        if loc == LOC_ENTER_CS:
            return Action(ActionKind.ENTER_CS)
        if loc == LOC_IN_CS:
            return Action(ActionKind.EXIT_CS)
        if loc == LOC_RESET:
            return Action(ActionKind.ENTER_REMAINDER)
        raise ProtocolError(f"unknown location {loc!r}")

    # -- transition --------------------------------------------------------

    def advance(self, local: Fig1Local, observed: Optional[RegisterValue]) -> Fig1Local:
        loc = local.loc
        m = self.m
        me = local.me

        if loc == LOC_SCAN_FOR_ZERO:
            pos = local.counter % m + 1
            if observed == FREE:
                return replace(local, counter=pos, loc=LOC_CLAIM_FIRST)
            return replace(local, counter=pos)

        if loc == LOC_CLAIM_FIRST:
            return replace(local, loc=LOC_GATE_VIEW_SCAN, j=0)

        if loc == LOC_GATE_VIEW_SCAN:
            local = self._record_view(local, observed)
            if local.j < m:
                return local
            if any(v == WAITING for v in local.view):
                return replace(local, loc=LOC_GATE_RELEASE_CHECK)
            return replace(local, loc=LOC_PROBE_FREE, k=0, j=0)

        if loc == LOC_GATE_RELEASE_CHECK:
            if observed is not None and observed.owned_by(me):
                return replace(local, loc=LOC_GATE_RELEASE_WRITE)
            return replace(local, loc=LOC_GATE_WAIT_SCAN, j=0)

        if loc == LOC_GATE_RELEASE_WRITE:
            return replace(local, loc=LOC_GATE_WAIT_SCAN, j=0)

        if loc == LOC_GATE_WAIT_SCAN:
            local = self._record_view(local, observed)
            if local.j < m:
                return local
            if all(v != WAITING for v in local.view):
                return replace(local, loc=LOC_PROBE_FREE, k=0, j=0)
            return replace(local, j=0)

        if loc == LOC_PROBE_FREE:
            k = local.k + 1
            if observed == FREE:
                return replace(local, k=k, loc=LOC_OWN_VIEW_SCAN, j=0)
            if k == m:
                return replace(local, k=k, loc=LOC_TALLY_SCAN, j=0)
            return replace(local, k=k)

        if loc == LOC_OWN_VIEW_SCAN:
            local = self._record_view(local, observed)
            if local.j < m:
                return local
            if self._own_count(local) < self.own_target:
                return replace(local, loc=LOC_OWN_WRITE)
            return self._after_probe_slot(local)

        if loc == LOC_OWN_WRITE:
            return self._after_probe_slot(local)

        if loc == LOC_TALLY_SCAN:
            local = self._record_view(local, observed)
            if local.j < m:
                return local
            count = self._own_count(local)
            if count < self.lose_threshold:
                return replace(local, loc=LOC_LOSER_RELEASE_PROBE, counter=0, j=0)
            if count == self.own_target:
                return replace(local, loc=LOC_ENTER_CS)
            return replace(local, loc=LOC_PROBE_FREE, k=0, j=0)

        if loc == LOC_LOSER_RELEASE_PROBE:
            j = local.j + 1
            if observed is not None and observed.owned_by(me):
                target = LOC_RELEASE_EXTRA if local.counter == self.reserve else LOC_SIGNAL_WAITING
                return replace(local, j=j, loc=target)
            if j == m:
                return replace(local, j=0, loc=LOC_WAIT_SCAN)
            return replace(local, j=j)

        if loc == LOC_RELEASE_EXTRA:
            return self._after_release_slot(local)

        if loc == LOC_SIGNAL_WAITING:
            local = replace(local, counter=local.counter + 1)
            return self._after_release_slot(local)

        if loc == LOC_WAIT_SCAN:
            local = self._record_view(local, observed)
            if local.j < m:
                return local
            if all(v == FREE or v == WAITING for v in local.view):
                return replace(local, loc=LOC_ENTER_CS, mygo=True)
            return replace(local, j=0)

        if loc == LOC_ENTER_CS:
            return replace(local, loc=LOC_IN_CS)

        if loc == LOC_IN_CS:
            target = LOC_RELEASE_WAITER_PROBE if local.mygo else LOC_RELEASE_WINNER_PROBE
            return replace(local, loc=target, j=0)

        if loc == LOC_RELEASE_WAITER_PROBE:
            j = local.j + 1
            if observed == WAITING:
                return replace(local, j=j, loc=LOC_RELEASE_WAITER)
            if j == m:
                return replace(local, j=j, loc=LOC_RESET)
            return replace(local, j=j)

        if loc == LOC_RELEASE_WAITER:
            if local.j == m:
                return replace(local, loc=LOC_RESET)
            return replace(local, loc=LOC_RELEASE_WAITER_PROBE)

        if loc == LOC_RELEASE_WINNER_PROBE:
            j = local.j + 1
            if observed is not None and observed.owned_by(me):
                return replace(local, j=j, loc=LOC_RELEASE_WINNER)
            if j == m:
                return replace(local, j=j, loc=LOC_RESET)
            return replace(local, j=j)

        if loc == LOC_RELEASE_WINNER:
            if local.j == m:
                return replace(local, loc=LOC_RESET)
            return replace(local, loc=LOC_RELEASE_WINNER_PROBE)

        if loc == LOC_RESET:
            return self.initial_local(me, m)

        raise ProtocolError(f"cannot advance from location {loc!r}")

    # -- helpers -------------------------------------------------------

    def _record_view(self, local: Fig1Local, observed: RegisterValue) -> Fig1Local:
        j = local.j + 1
        view = local.view[: j - 1] + (observed,) + local.view[j:]
        return replace(local, j=j, view=view)

    def _own_count(self, local: Fig1Local) -> int:
        me = local.me
        return sum(1 for v in local.view if v.owned_by(me))

    def _after_probe_slot(self, local: Fig1Local) -> Fig1Local:
        if local.k == self.m:
            return replace(local, loc=LOC_TALLY_SCAN, j=0)
        return replace(local, loc=LOC_PROBE_FREE)

    def _after_release_slot(self, local: Fig1Local) -> Fig1Local:
        if local.j == self.m:
            return replace(local, loc=LOC_WAIT_SCAN, j=0)
        return replace(local, loc=LOC_LOSER_RELEASE_PROBE)


def build_program(config: Fig1Config) -> Fig1Program:
    """Construct the program for a configuration, validating the size rules."""
    return Fig1Program(config)


def line_map(program: Fig1Program) -> Mapping[str, int]:
    """Map each reachable program location to its pseudocode line number."""
    reachable = dict(_LINE_MAP)
    if not program.gate:
        for loc in _GATE_LOCATIONS:
            reachable.pop(loc)
    return reachable


PROGRAM_VARIANTS = {
    "fig1": Variant.STANDARD,
    "fig1-no-gate": Variant.NO_PRIORITY_GATE,
    "fig1-one-reserved": Variant.ONE_RESERVED_REGISTER,
}


def build_named(name: str, m: int, allow_invalid_m: bool = False) -> Fig1Program:
    """Build a program by registry name (``fig1``, ``fig1-no-gate``, ...)."""
    try:
        variant = PROGRAM_VARIANTS[name]
    except KeyError:
        raise ConfigError(
            f"unknown program {name!r}; available: {', '.join(sorted(PROGRAM_VARIANTS))}"
        ) from None
    return build_program(Fig1Config(m=m, variant=variant, allow_invalid_m=allow_invalid_m))
