"""Pure-Python stepping kernel for the two-process algorithm family.

This is the fallback backend behind :mod:`anonmutex.engine`.  It mirrors the
compiled kernel operation for operation: integer-encoded registers and
locals, the same scheduler arithmetic, the same state-byte layout.  The
model layer in :mod:`anonmutex.fig1` stays the readable reference; parity
tests hold all three implementations together.

Encoding: register values are ``0`` (free), ``-1`` (waiting), or a positive
identifier token.  Event codes returned by :meth:`Fig1Kernel.step` are
0 read, 1 write, 2 enter-cs, 3 exit-cs, 4 enter-remainder.
"""

from __future__ import annotations

from array import array

BACKEND_NAME = "pure"

_M64 = (1 << 64) - 1

# location codes (section is derived: 0 remainder, 1..15 entry, 16 cs, 17+ exit)
REM = 0
SCAN_FOR_ZERO = 1
CLAIM_FIRST = 2
GATE_VIEW_SCAN = 3
GATE_RELEASE_CHECK = 4
GATE_RELEASE_WRITE = 5
GATE_WAIT_SCAN = 6
PROBE_FREE = 7
OWN_VIEW_SCAN = 8
OWN_WRITE = 9
TALLY_SCAN = 10
LOSER_RELEASE_PROBE = 11
RELEASE_EXTRA = 12
SIGNAL_WAITING = 13
WAIT_SCAN = 14
ENTER_CS = 15
IN_CS = 16
RELEASE_WAITER_PROBE = 17
RELEASE_WAITER = 18
RELEASE_WINNER_PROBE = 19
RELEASE_WINNER = 20
RESET = 21

EV_READ = 0
EV_WRITE = 1
EV_ENTER_CS = 2
EV_EXIT_CS = 3
EV_ENTER_REMAINDER = 4


def splitmix64(state: int):
    """One step of the splitmix64 generator; returns (new state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return state, (z ^ (z >> 31)) & _M64


def schedule_seed(base: int, pair_index: int, schedule_index: int) -> int:
    """Derived per-schedule seed; identical in both backends."""
    x = (base ^ (pair_index * 0xA24BAED4963EE407) ^ (schedule_index * 0x9FB21C651E98DF25)) & _M64
    _, out = splitmix64(x)
    return out


def section_of_loc(loc: int) -> int:
    if loc == REM:
        return 0
    if loc < IN_CS:
        return 1
    if loc == IN_CS:
        return 2
    return 3


class Fig1Kernel:
    """n processes running one program variant over m integer registers."""

    def __init__(self, m, ids, tables, gate, reserve):
        n = len(ids)
        if n < 1:
            raise ValueError("kernel needs at least one process")
        if any(not 1 <= t <= 120 for t in ids):
            raise ValueError("kernel identifier tokens must be in 1..120")
        if len(set(ids)) != n:
            raise ValueError("kernel identifier tokens must be distinct")
        for table in tables:
            if sorted(table) != list(range(1, m + 1)):
                raise ValueError("naming table is not a permutation")
        self.m = m
        self.n = n
        self.ids = list(ids)
        self.gate = 1 if gate else 0
        self.reserve = reserve
        self.own_target = m - 2
        self.lose_threshold = (m + 1) // 2
        # flattened: process i's logical slot v is perm[i * m + v]
        self.perm = array("i", [t - 1 for table in tables for t in table])
        self.regs = array("i", [0] * m)
        self.loc = array("i", [0] * n)
        self.counter = array("i", [0] * n)
        self.jj = array("i", [0] * n)
        self.kk = array("i", [0] * n)
        self.mygo = array("i", [0] * n)
        self.view = array("i", [0] * (n * m))

    # -- state snapshots -----------------------------------------------

    def reset(self):
        m, n = self.m, self.n
        for r in range(m):
            self.regs[r] = 0
        for i in range(n):
            self.loc[i] = 0
            self.counter[i] = 0
            self.jj[i] = 0
            self.kk[i] = 0
            self.mygo[i] = 0
        for v in range(n * m):
            self.view[v] = 0

    def state_bytes(self) -> bytes:
        m, n = self.m, self.n
        out = bytearray(m + n * (5 + m))
        pos = 0
        for r in range(m):
            out[pos] = self.regs[r] & 0xFF
            pos += 1
        for i in range(n):
            out[pos] = self.loc[i]
            out[pos + 1] = self.counter[i]
            out[pos + 2] = self.jj[i]
            out[pos + 3] = self.kk[i]
            out[pos + 4] = self.mygo[i]
            pos += 5
            base = i * m
            for v in range(m):
                out[pos] = self.view[base + v] & 0xFF
                pos += 1
        return bytes(out)

    def load_state(self, data: bytes):
        m, n = self.m, self.n
        pos = 0
        for r in range(m):
            b = data[pos]
            self.regs[r] = b - 256 if b > 127 else b
            pos += 1
        for i in range(n):
            self.loc[i] = data[pos]
            self.counter[i] = data[pos + 1]
            self.jj[i] = data[pos + 2]
            self.kk[i] = data[pos + 3]
            self.mygo[i] = data[pos + 4]
            pos += 5
            base = i * m
            for v in range(m):
                b = data[pos]
                self.view[base + v] = b - 256 if b > 127 else b
                pos += 1

    def section_codes(self):
        return tuple(section_of_loc(self.loc[i]) for i in range(self.n))

    # -- the automaton ---------------------------------------------------

    def _own_count(self, i: int) -> int:
        me = self.ids[i]
        base = i * self.m
        count = 0
        for v in range(self.m):
            if self.view[base + v] == me:
                count += 1
        return count

    def step(self, i: int) -> int:
        """Perform process i's next event (begins entry when resting)."""
        m = self.m
        me = self.ids[i]
        loc = self.loc[i]
        if loc == REM:
            loc = SCAN_FOR_ZERO if self.gate else PROBE_FREE
            self.loc[i] = loc
            self.kk[i] = 0

        if loc == SCAN_FOR_ZERO:
            pos = self.counter[i] % m + 1
            value = self.regs[self.perm[i * m + pos - 1]]
            self.counter[i] = pos
            if value == 0:
                self.loc[i] = CLAIM_FIRST
            return EV_READ

        if loc == CLAIM_FIRST:
            self.regs[self.perm[i * m + self.counter[i] - 1]] = me
            self.loc[i] = GATE_VIEW_SCAN
            self.jj[i] = 0
            return EV_WRITE

        if loc == GATE_VIEW_SCAN:
            j = self.jj[i] + 1
            value = self.regs[self.perm[i * m + j - 1]]
            self.view[i * m + j - 1] = value
            self.jj[i] = j
            if j == m:
                waiting = False
                for v in range(m):
                    if self.view[i * m + v] == -1:
                        waiting = True
                        break
                if waiting:
                    self.loc[i] = GATE_RELEASE_CHECK
                else:
                    self.loc[i] = PROBE_FREE
                    self.kk[i] = 0
                    self.jj[i] = 0
            return EV_READ

        if loc == GATE_RELEASE_CHECK:
            value = self.regs[self.perm[i * m + self.counter[i] - 1]]
            if value == me:
                self.loc[i] = GATE_RELEASE_WRITE
            else:
                self.loc[i] = GATE_WAIT_SCAN
                self.jj[i] = 0
            return EV_READ

        if loc == GATE_RELEASE_WRITE:
            self.regs[self.perm[i * m + self.counter[i] - 1]] = 0
            self.loc[i] = GATE_WAIT_SCAN
            self.jj[i] = 0
            return EV_WRITE

        if loc == GATE_WAIT_SCAN:
            j = self.jj[i] + 1
            value = self.regs[self.perm[i * m + j - 1]]
            self.view[i * m + j - 1] = value
            self.jj[i] = j
            if j == m:
                waiting = False
                for v in range(m):
                    if self.view[i * m + v] == -1:
                        waiting = True
                        break
                if waiting:
                    self.jj[i] = 0
                else:
                    self.loc[i] = PROBE_FREE
                    self.kk[i] = 0
                    self.jj[i] = 0
            return EV_READ

        if loc == PROBE_FREE:
            k = self.kk[i] + 1
            value = self.regs[self.perm[i * m + k - 1]]
            self.kk[i] = k
            if value == 0:
                self.loc[i] = OWN_VIEW_SCAN
                self.jj[i] = 0
            elif k == m:
                self.loc[i] = TALLY_SCAN
                self.jj[i] = 0
            return EV_READ

        if loc == OWN_VIEW_SCAN:
            j = self.jj[i] + 1
            value = self.regs[self.perm[i * m + j - 1]]
            self.view[i * m + j - 1] = value
            self.jj[i] = j
            if j == m:
                if self._own_count(i) < self.own_target:
                    self.loc[i] = OWN_WRITE
                elif self.kk[i] == m:
                    self.loc[i] = TALLY_SCAN
                    self.jj[i] = 0
                else:
                    self.loc[i] = PROBE_FREE
            return EV_READ

        if loc == OWN_WRITE:
            self.regs[self.perm[i * m + self.kk[i] - 1]] = me
            if self.kk[i] == m:
                self.loc[i] = TALLY_SCAN
                self.jj[i] = 0
            else:
                self.loc[i] = PROBE_FREE
            return EV_WRITE

        if loc == TALLY_SCAN:
            j = self.jj[i] + 1
            value = self.regs[self.perm[i * m + j - 1]]
            self.view[i * m + j - 1] = value
            self.jj[i] = j
            if j == m:
                count = self._own_count(i)
                if count < self.lose_threshold:
                    self.loc[i] = LOSER_RELEASE_PROBE
                    self.counter[i] = 0
                    self.jj[i] = 0
                elif count == self.own_target:
                    self.loc[i] = ENTER_CS
                else:
                    self.loc[i] = PROBE_FREE
                    self.kk[i] = 0
                    self.jj[i] = 0
            return EV_READ

        if loc == LOSER_RELEASE_PROBE:
            j = self.jj[i] + 1
            value = self.regs[self.perm[i * m + j - 1]]
            self.jj[i] = j
            if value == me:
                if self.counter[i] == self.reserve:
                    self.loc[i] = RELEASE_EXTRA
                else:
                    self.loc[i] = SIGNAL_WAITING
            elif j == m:
                self.loc[i] = WAIT_SCAN
                self.jj[i] = 0
            return EV_READ

        if loc == RELEASE_EXTRA:
            self.regs[self.perm[i * m + self.jj[i] - 1]] = 0
            if self.jj[i] == m:
                self.loc[i] = WAIT_SCAN
                self.jj[i] = 0
            else:
                self.loc[i] = LOSER_RELEASE_PROBE
            return EV_WRITE

        if loc == SIGNAL_WAITING:
            self.regs[self.perm[i * m + self.jj[i] - 1]] = -1
            self.counter[i] += 1
            if self.jj[i] == m:
                self.loc[i] = WAIT_SCAN
                self.jj[i] = 0
            else:
                self.loc[i] = LOSER_RELEASE_PROBE
            return EV_WRITE

        if loc == WAIT_SCAN:
            j = self.jj[i] + 1
            value = self.regs[self.perm[i * m + j - 1]]
            self.view[i * m + j - 1] = value
            self.jj[i] = j
            if j == m:
                clear = True
                for v in range(m):
                    if self.view[i * m + v] > 0:
                        clear = False
                        break
                if clear:
                    self.mygo[i] = 1
                    self.loc[i] = ENTER_CS
                else:
                    self.jj[i] = 0
            return EV_READ

        if loc == ENTER_CS:
            self.loc[i] = IN_CS
            return EV_ENTER_CS

        if loc == IN_CS:
            self.loc[i] = RELEASE_WAITER_PROBE if self.mygo[i] else RELEASE_WINNER_PROBE
            self.jj[i] = 0
            return EV_EXIT_CS

        if loc == RELEASE_WAITER_PROBE:
            j = self.jj[i] + 1
            value = self.regs[self.perm[i * m + j - 1]]
            self.jj[i] = j
            if value == -1:
                self.loc[i] = RELEASE_WAITER
            elif j == m:
                self.loc[i] = RESET
            return EV_READ

        if loc == RELEASE_WAITER:
            self.regs[self.perm[i * m + self.jj[i] - 1]] = 0
            self.loc[i] = RESET if self.jj[i] == m else RELEASE_WAITER_PROBE
            return EV_WRITE

        if loc == RELEASE_WINNER_PROBE:
            j = self.jj[i] + 1
            value = self.regs[self.perm[i * m + j - 1]]
            self.jj[i] = j
            if value == me:
                self.loc[i] = RELEASE_WINNER
            elif j == m:
                self.loc[i] = RESET
            return EV_READ

        if loc == RELEASE_WINNER:
            self.regs[self.perm[i * m + self.jj[i] - 1]] = 0
            self.loc[i] = RESET if self.jj[i] == m else RELEASE_WINNER_PROBE
            return EV_WRITE

        if loc == RESET:
            self.loc[i] = REM
            self.counter[i] = 0
            self.jj[i] = 0
            self.kk[i] = 0
            self.mygo[i] = 0
            base = i * m
            for v in range(m):
                self.view[base + v] = 0
            return EV_ENTER_REMAINDER

        raise ValueError(f"corrupt location code {loc}")

    # -- whole-schedule fuzzing ----------------------------------------

    def _all_remainder(self) -> bool:
        for i in range(self.n):
            if self.loc[i] != REM:
                return False
        return True

    def _is_initial(self) -> bool:
        for r in range(self.m):
            if self.regs[r] != 0:
                return False
        for i in range(self.n):
            if self.loc[i] or self.counter[i] or self.jj[i] or self.kk[i] or self.mygo[i]:
                return False
        for v in range(self.n * self.m):
            if self.view[v] != 0:
                return False
        return True

    def fuzz_schedule(self, seed, steps, burst_max, begin_num, begin_den, progress_cap):
        """Run one random fair schedule from the initial state.

        Returns (code, step index, choice log): code 0 clean, 1 mutex
        violation, 2 memoryless breach, 3 progress flag.  The choice log
        records one byte per slot (actor index, high bit set for an idle
        turn) and is returned only when something went wrong.
        """
        self.reset()
        n = self.n
        rng = seed & _M64
        choices = bytearray(steps)
        entry_start = [-1] * n
        cs_count = 0
        ptr = n - 1
        burst = 0
        for t in range(steps):
            if burst == 0:
                ptr += 1
                if ptr == n:
                    ptr = 0
                rng, r = splitmix64(rng)
                burst = 1 + (r % burst_max)
            burst -= 1
            p = ptr
            if self.loc[p] == REM:
                rng, r = splitmix64(rng)
                if (r % begin_den) >= begin_num:
                    choices[t] = 0x80 | p
                    burst = 0
                    continue
                entry_start[p] = t
            code = self.step(p)
            choices[t] = p
            if code == EV_ENTER_CS:
                entry_start[p] = -1
                cs_count += 1
                if cs_count >= 2:
                    return 1, t, bytes(choices[: t + 1])
            elif code == EV_EXIT_CS:
                cs_count -= 1
            elif code == EV_ENTER_REMAINDER:
                if self._all_remainder() and not self._is_initial():
                    return 2, t, bytes(choices[: t + 1])
            if entry_start[p] >= 0 and t - entry_start[p] >= progress_cap:
                return 3, t, bytes(choices[: t + 1])
        for p in range(n):
            if entry_start[p] >= 0 and steps - entry_start[p] >= progress_cap:
                return 3, steps - 1, bytes(choices)
        return 0, -1, b""

    # -- bounded exhaustive exploration ----------------------------------

    def explore(self, max_states, max_depth):
        """Breadth-first closure of the interleaving graph with state hashing.

        Returns (complete, keys, parent, parent_actor, depth, entry_mask,
        nonrem_mask, cs_mask, edges_src, edges_dst, edges_actor, edges_cs).
        """
        self.reset()
        n = self.n
        key0 = self.state_bytes()
        index = {key0: 0}
        keys = [key0]
        parent = array("i", [-1])
        parent_actor = array("b", [-1])
        depth = array("i", [0])
        entry_mask = bytearray(1)
        nonrem_mask = bytearray(1)
        cs_mask = bytearray(1)
        self._record_masks(0, entry_mask, nonrem_mask, cs_mask)
        edges_src = array("i")
        edges_dst = array("i")
        edges_actor = array("b")
        edges_cs = array("b")
        truncated = False
        head = 0
        while head < len(keys):
            d = depth[head]
            if max_depth and d >= max_depth:
                truncated = True
                head += 1
                continue
            key = keys[head]
            for p in range(n):
                self.load_state(key)
                code = self.step(p)
                successor = self.state_bytes()
                sid = index.get(successor, -1)
                if sid < 0:
                    if len(keys) >= max_states:
                        truncated = True
                        continue
                    sid = len(keys)
                    index[successor] = sid
                    keys.append(successor)
                    parent.append(head)
                    parent_actor.append(p)
                    depth.append(d + 1)
                    entry_mask.append(0)
                    nonrem_mask.append(0)
                    cs_mask.append(0)
                    self._record_masks(sid, entry_mask, nonrem_mask, cs_mask)
                edges_src.append(head)
                edges_dst.append(sid)
                edges_actor.append(p)
                edges_cs.append(1 if code == EV_ENTER_CS else 0)
            head += 1
        return (
            not truncated,
            keys,
            parent,
            parent_actor,
            depth,
            bytes(entry_mask),
            bytes(nonrem_mask),
            bytes(cs_mask),
            edges_src,
            edges_dst,
            edges_actor,
            edges_cs,
        )

    def _record_masks(self, sid, entry_mask, nonrem_mask, cs_mask):
        e = nr = cs = 0
        for i in range(self.n):
            section = section_of_loc(self.loc[i])
            if section != 0:
                nr |= 1 << i
            if section == 1:
                e |= 1 << i
            elif section == 2:
                cs |= 1 << i
        entry_mask[sid] = e
        nonrem_mask[sid] = nr
        cs_mask[sid] = cs
