"""Predicates and rewrites over runs: indistinguishability, hidden writes,
register swaps, run extension, and state symmetry.

These are the executable counterparts of the run-manipulation arguments the
adversary module is built on.  Every rewrite re-validates its output by
replay; none of them may silently produce a run that does not replay.
"""

from __future__ import annotations

from typing import Set

from .errors import (
    ConstructionInvariantError,
    ExtensionPreconditionError,
    InvalidEventError,
    SwapPreconditionError,
)
from .model import (
    Event,
    EventKind,
    GlobalState,
    Run,
    is_prefix,
    replay,
    run_difference,
    validate_run,
)
from .naming import NamingAssignment, swap_naming
from .values import ProcessId, RegisterValue


def looks_like(x: Run, y: Run, p: ProcessId) -> bool:
    """True iff runs x and y are indistinguishable to process p.

    Requires p's event subsequence to be identical in both runs and the
    final register values to coincide.
    """
    if x.events_by(p) != y.events_by(p):
        return False
    return replay(x).memory == replay(y).memory


def is_overwritten(z: Run, e1: int, e2: int) -> bool:
    """True iff event e2 is a later write to the same register as write e1."""
    n = len(z.events)
    if not (0 <= e1 < n and 0 <= e2 < n):
        raise InvalidEventError(f"event positions ({e1}, {e2}) out of 0..{n - 1}")
    a, b = z.events[e1], z.events[e2]
    return (
        e1 < e2
        and a.kind is EventKind.WRITE
        and b.kind is EventKind.WRITE
        and a.physical == b.physical
    )


def _post_remainder_start(z: Run, p: ProcessId) -> int:
    """Index of p's first event after its last return to the remainder.

    Returns len(z) when p is in its remainder at the end of z (the longest
    remainder prefix is z itself).
    """
    last_rem = -1
    for i, e in enumerate(z.events):
        if e.actor == p and e.kind is EventKind.ENTER_REMAINDER:
            last_rem = i
    for i in range(last_rem + 1, len(z.events)):
        if z.events[i].actor == p:
            return i
    return len(z.events)


def is_hidden(z: Run, p: ProcessId) -> bool:
    """True iff p's steps since it last left its remainder communicate nothing.

    Every event of p after the longest remainder prefix must be a read, a
    section change, or a write that is overwritten before any other process
    reads that register.
    """
    start = _post_remainder_start(z, p)
    events = z.events
    for i in range(start, len(events)):
        e = events[i]
        if e.actor != p or e.kind is not EventKind.WRITE:
            continue
        covered = False
        for j in range(i + 1, len(events)):
            later = events[j]
            if later.physical != e.physical:
                continue
            if later.kind is EventKind.WRITE:
                covered = True
                break
            if later.kind is EventKind.READ and later.actor != p:
                return False
        if not covered:
            return False
    return True


def swap_run(x: Run, p: ProcessId, i: int, j: int) -> Run:
    """Rename two of p's registers throughout a run.

    Exchanges which physical registers p's logical indices i and j denote
    (its assignment is replaced by the swapped one) and rewrites p's events
    accordingly, values preserved.  Only valid while both physical registers
    are still unwritten, so every read of them returned the shared initial
    value.  The result is replay-validated.
    """
    pi = x.naming_of(p)
    a, b = pi.physical(i), pi.physical(j)
    if i == j:
        return x
    for e in x.events:
        if e.kind is EventKind.WRITE and e.physical in (a, b):
            raise SwapPreconditionError(
                f"register {e.physical} was written in the run; swap ({i},{j}) invalid"
            )
    if x.initial.memory.value_at(a) != x.initial.memory.value_at(b):
        raise SwapPreconditionError(
            f"registers {a} and {b} start with different values"
        )
    new_pi = swap_naming(pi, i, j)
    events = []
    for e in x.events:
        if e.actor == p and e.is_memory_access and e.logical in (i, j):
            events.append(
                Event(e.actor, e.kind, e.logical, new_pi.physical(e.logical), e.value)
            )
        else:
            events.append(e)
    y = Run(x.initial, tuple(events), {**x.assignments, p: new_pi})
    validate_run(y)
    return y


def extend_run(y: Run, x: Run, z: Run, procs: Set[ProcessId]) -> Run:
    """Transplant the extension (z - x) onto y.

    Preconditions: x looks like y to every process in ``procs``, z extends x,
    and every event of (z - x) involves only those processes.  The appended
    run replays by construction; a divergence here is an internal bug, not a
    caller error.
    """
    if not is_prefix(x, z):
        raise ExtensionPreconditionError("z does not extend x")
    suffix = run_difference(z, x)
    outsiders = {e.actor for e in suffix} - set(procs)
    if outsiders:
        raise ExtensionPreconditionError(
            f"extension involves processes outside the set: {sorted(map(repr, outsiders))}"
        )
    for p in procs:
        if x.naming_of(p) != y.naming_of(p):
            raise ExtensionPreconditionError(f"{p!r} has different assignments in x and y")
        if not looks_like(x, y, p):
            raise ExtensionPreconditionError(f"x does not look like y to {p!r}")
    result = y.extended(suffix)
    try:
        replay(result)
    except Exception as exc:  # pragma: no cover - preconditions forbid this
        raise ConstructionInvariantError(
            f"extension failed to replay despite preconditions: {exc}"
        ) from exc
    return result


def erase_process(z: Run, p: ProcessId) -> Run:
    """Run z with all of p's events removed.

    Meaningful when p is hidden: removing reads changes nothing, and each of
    p's writes was overwritten before anyone read it, so the remaining events
    still replay.  The result is replay-validated.
    """
    events = tuple(e for e in z.events if e.actor != p)
    y = Run(z.initial, events, dict(z.assignments))
    replay(y)
    return y


def _mentions(value, p: ProcessId, q: ProcessId):
    """Classify a local or register value against the two identities.

    Returns 'p', 'q', or None (value mentions neither).
    """
    if isinstance(value, RegisterValue):
        if value.owned_by(p):
            return "p"
        if value.owned_by(q):
            return "q"
        return None
    if isinstance(value, ProcessId):
        if value == p:
            return "p"
        if value == q:
            return "q"
    return None


def _pair_symmetric(val_p, val_q, p: ProcessId, q: ProcessId) -> bool:
    mp, mq = _mentions(val_p, p, q), _mentions(val_q, p, q)
    if mp is None and mq is None:
        return val_p == val_q
    return (mp, mq) in (("p", "q"), ("q", "p"))


def is_symmetric_state(
    state: GlobalState,
    p: ProcessId,
    q: ProcessId,
    pi_p: NamingAssignment,
    pi_q: NamingAssignment,
) -> bool:
    """True iff the state is a mirror image under the two naming assignments.

    For every logical index the two registers must hold equal values not
    naming either process, or the owners' own identifiers in matching
    positions.  The same three-way condition applies to every local variable,
    and both processes must be at the same program location (same section,
    same local control state).
    """
    if p == q:
        raise InvalidEventError("symmetry is defined for two distinct processes")
    m = state.memory.m
    for k in range(1, m + 1):
        vp = state.memory.value_at(pi_p.physical(k))
        vq = state.memory.value_at(pi_q.physical(k))
        if not _pair_symmetric(vp, vq, p, q):
            return False
    if state.section_of(p) is not state.section_of(q):
        return False
    lp, lq = state.locals.get(p), state.locals.get(q)
    if lp is None or lq is None:
        return lp is lq
    items_p = dict(lp.symmetry_items())
    items_q = dict(lq.symmetry_items())
    if items_p.keys() != items_q.keys():
        return False
    for name, val_p in items_p.items():
        val_q = items_q[name]
        if isinstance(val_p, tuple) and isinstance(val_q, tuple):
            if len(val_p) != len(val_q):
                return False
            if not all(_pair_symmetric(a, b, p, q) for a, b in zip(val_p, val_q)):
                return False
        elif not _pair_symmetric(val_p, val_q, p, q):
            return False
    return True
