# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernel: same contract as ``_kernel_py``, C inner loops.

Keep this file a line-for-line twin of the pure backend; the parity tests
compare the two on random schedules and explorations.
"""

from libc.stdlib cimport calloc, free
from libc.string cimport memcpy, memset
from cpython.bytes cimport PyBytes_FromStringAndSize

from array import array

BACKEND_NAME = "compiled"

cdef extern from *:
    """
    typedef unsigned long long u64;
    static inline u64 sm64_next(u64 *state) {
        u64 z = (*state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    ctypedef unsigned long long u64
    u64 sm64_next(u64 *state) nogil

DEF REM = 0
DEF SCAN_FOR_ZERO = 1
DEF CLAIM_FIRST = 2
DEF GATE_VIEW_SCAN = 3
DEF GATE_RELEASE_CHECK = 4
DEF GATE_RELEASE_WRITE = 5
DEF GATE_WAIT_SCAN = 6
DEF PROBE_FREE = 7
DEF OWN_VIEW_SCAN = 8
DEF OWN_WRITE = 9
DEF TALLY_SCAN = 10
DEF LOSER_RELEASE_PROBE = 11
DEF RELEASE_EXTRA = 12
DEF SIGNAL_WAITING = 13
DEF WAIT_SCAN = 14
DEF ENTER_CS = 15
DEF IN_CS = 16
DEF RELEASE_WAITER_PROBE = 17
DEF RELEASE_WAITER = 18
DEF RELEASE_WINNER_PROBE = 19
DEF RELEASE_WINNER = 20
DEF RESET = 21

DEF EV_READ = 0
DEF EV_WRITE = 1
DEF EV_ENTER_CS = 2
DEF EV_EXIT_CS = 3
DEF EV_ENTER_REMAINDER = 4


def splitmix64(state):
    """One step of the splitmix64 generator; returns (new state, output)."""
    cdef u64 s = <u64> (state & 0xFFFFFFFFFFFFFFFF)
    cdef u64 out = sm64_next(&s)
    return s, out


def schedule_seed(base, pair_index, schedule_index):
    """Derived per-schedule seed; identical in both backends."""
    cdef u64 x = (<u64> base) ^ (<u64> pair_index * 0xA24BAED4963EE407ULL) \
        ^ (<u64> schedule_index * 0x9FB21C651E98DF25ULL)
    return sm64_next(&x)


cpdef int section_of_loc(int loc):
    if loc == REM:
        return 0
    if loc < IN_CS:
        return 1
    if loc == IN_CS:
        return 2
    return 3


cdef class Fig1Kernel:
    """n processes running one program variant over m integer registers."""

    cdef public int m, n, gate, reserve, own_target, lose_threshold
    cdef public object ids
    cdef int *c_ids
    cdef int *perm
    cdef int *regs
    cdef int *loc
    cdef int *counter
    cdef int *jj
    cdef int *kk
    cdef int *mygo
    cdef int *view
    cdef unsigned char *packbuf
    cdef int packlen

    def __cinit__(self, m, ids, tables, gate, reserve):
        cdef int n = len(ids)
        if n < 1:
            raise ValueError("kernel needs at least one process")
        for t in ids:
            if not 1 <= t <= 120:
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
        self.c_ids = <int *> calloc(n, sizeof(int))
        self.perm = <int *> calloc(n * m, sizeof(int))
        self.regs = <int *> calloc(m, sizeof(int))
        self.loc = <int *> calloc(n, sizeof(int))
        self.counter = <int *> calloc(n, sizeof(int))
        self.jj = <int *> calloc(n, sizeof(int))
        self.kk = <int *> calloc(n, sizeof(int))
        self.mygo = <int *> calloc(n, sizeof(int))
        self.view = <int *> calloc(n * m, sizeof(int))
        self.packlen = m + n * (5 + m)
        self.packbuf = <unsigned char *> calloc(self.packlen, 1)
        cdef int i, v
        for i in range(n):
            self.c_ids[i] = ids[i]
            for v in range(m):
                self.perm[i * m + v] = tables[i][v] - 1

    def __dealloc__(self):
        free(self.c_ids)
        free(self.perm)
        free(self.regs)
        free(self.loc)
        free(self.counter)
        free(self.jj)
        free(self.kk)
        free(self.mygo)
        free(self.view)
        free(self.packbuf)

    # -- state snapshots -----------------------------------------------

    def reset(self):
        memset(self.regs, 0, self.m * sizeof(int))
        memset(self.loc, 0, self.n * sizeof(int))
        memset(self.counter, 0, self.n * sizeof(int))
        memset(self.jj, 0, self.n * sizeof(int))
        memset(self.kk, 0, self.n * sizeof(int))
        memset(self.mygo, 0, self.n * sizeof(int))
        memset(self.view, 0, self.n * self.m * sizeof(int))

    cdef void _pack(self) nogil:
        cdef int m = self.m, n = self.n
        cdef int pos = 0, r, i, v, base
        for r in range(m):
            self.packbuf[pos] = <unsigned char> (self.regs[r] & 0xFF)
            pos += 1
        for i in range(n):
            self.packbuf[pos] = <unsigned char> self.loc[i]
            self.packbuf[pos + 1] = <unsigned char> self.counter[i]
            self.packbuf[pos + 2] = <unsigned char> self.jj[i]
            self.packbuf[pos + 3] = <unsigned char> self.kk[i]
            self.packbuf[pos + 4] = <unsigned char> self.mygo[i]
            pos += 5
            base = i * m
            for v in range(m):
                self.packbuf[pos] = <unsigned char> (self.view[base + v] & 0xFF)
                pos += 1

    def state_bytes(self):
        self._pack()
        return PyBytes_FromStringAndSize(<char *> self.packbuf, self.packlen)

    cdef void _unpack(self, const unsigned char *data) nogil:
        cdef int m = self.m, n = self.n
        cdef int pos = 0, r, i, v, base
        cdef int b
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

    def load_state(self, bytes data):
        if len(data) != self.packlen:
            raise ValueError("state blob has wrong length")
        self._unpack(<const unsigned char *> data)

    def section_codes(self):
        return tuple(section_of_loc(self.loc[i]) for i in range(self.n))

    # accessors mirroring the pure backend's attribute surface (tests)
    def get_regs(self):
        return [self.regs[r] for r in range(self.m)]

    def get_loc(self, int i):
        return self.loc[i]

    # -- the automaton ---------------------------------------------------

    cdef int _own_count(self, int i) nogil:
        cdef int me = self.c_ids[i]
        cdef int base = i * self.m
        cdef int count = 0, v
        for v in range(self.m):
            if self.view[base + v] == me:
                count += 1
        return count

    cdef int c_step(self, int i) nogil:
        cdef int m = self.m
        cdef int me = self.c_ids[i]
        cdef int loc = self.loc[i]
        cdef int pos, value, j, k, v, count
        cdef bint waiting, clear

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
            for v in range(m):
                self.view[i * m + v] = 0
            return EV_ENTER_REMAINDER

        return -1

    def step(self, int i):
        cdef int code = self.c_step(i)
        if code < 0:
            raise ValueError(f"corrupt location code {self.loc[i]}")
        return code

    # -- whole-schedule fuzzing ----------------------------------------

    cdef bint _all_remainder(self) nogil:
        cdef int i
        for i in range(self.n):
            if self.loc[i] != REM:
                return False
        return True

    cdef bint _is_initial(self) nogil:
        cdef int r, i, v
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

    def fuzz_schedule(self, seed, long long steps, int burst_max,
                      int begin_num, int begin_den, long long progress_cap):
        """Run one random fair schedule; see the pure backend for the contract."""
        self.reset()
        cdef int n = self.n
        cdef u64 rng = <u64> (seed & 0xFFFFFFFFFFFFFFFF)
        cdef bytearray choices_obj = bytearray(steps)
        cdef unsigned char[::1] choices = choices_obj
        cdef long long *entry_start = <long long *> calloc(n, sizeof(long long))
        cdef int p, code, cs_count = 0, ptr = n - 1, burst = 0
        cdef long long t
        cdef int violation = 0
        cdef long long vstep = -1
        for p in range(n):
            entry_start[p] = -1
        try:
            for t in range(steps):
                if burst == 0:
                    ptr += 1
                    if ptr == n:
                        ptr = 0
                    burst = 1 + <int> (sm64_next(&rng) % <u64> burst_max)
                burst -= 1
                p = ptr
                if self.loc[p] == REM:
                    if <int> (sm64_next(&rng) % <u64> begin_den) >= begin_num:
                        choices[t] = 0x80 | p
                        burst = 0
                        continue
                    entry_start[p] = t
                code = self.c_step(p)
                choices[t] = p
                if code == EV_ENTER_CS:
                    entry_start[p] = -1
                    cs_count += 1
                    if cs_count >= 2:
                        violation = 1
                        vstep = t
                        break
                elif code == EV_EXIT_CS:
                    cs_count -= 1
                elif code == EV_ENTER_REMAINDER:
                    if self._all_remainder() and not self._is_initial():
                        violation = 2
                        vstep = t
                        break
                if entry_start[p] >= 0 and t - entry_start[p] >= progress_cap:
                    violation = 3
                    vstep = t
                    break
            else:
                for p in range(n):
                    if entry_start[p] >= 0 and steps - entry_start[p] >= progress_cap:
                        violation = 3
                        vstep = steps - 1
                        break
        finally:
            free(entry_start)
        if violation == 0:
            return 0, -1, b""
        if vstep == steps - 1:
            return violation, vstep, bytes(choices_obj)
        return violation, vstep, bytes(choices_obj[: vstep + 1])

    # -- bounded exhaustive exploration ----------------------------------

    def explore(self, long long max_states, long long max_depth):
        """Breadth-first closure; same return shape as the pure backend."""
        self.reset()
        cdef int n = self.n
        key0 = self.state_bytes()
        index = {key0: 0}
        keys = [key0]
        parent = array("i", [-1])
        parent_actor = array("b", [-1])
        depth = array("i", [0])
        entry_mask = bytearray(1)
        nonrem_mask = bytearray(1)
        cs_mask = bytearray(1)
        self._record_masks_at(0, entry_mask, nonrem_mask, cs_mask)
        edges_src = array("i")
        edges_dst = array("i")
        edges_actor = array("b")
        edges_cs = array("b")
        cdef bint truncated = False
        cdef long long head = 0
        cdef int p, code, d
        cdef long long sid
        while head < len(keys):
            d = depth[head]
            if max_depth and d >= max_depth:
                truncated = True
                head += 1
                continue
            key = keys[head]
            for p in range(n):
                self._unpack(<const unsigned char *> (<bytes> key))
                code = self.c_step(p)
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
                    self._record_masks_at(sid, entry_mask, nonrem_mask, cs_mask)
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

    def _record_masks_at(self, sid, entry_mask, nonrem_mask, cs_mask):
        cdef int e = 0, nr = 0, cs = 0, i, section
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
