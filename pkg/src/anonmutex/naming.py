"""Naming assignments: per-process permutations of the register indices.

A process never addresses a register directly; it addresses its j'th
register, and the assignment (chosen by the adversary, fixed for the
lifetime of a run) maps that logical index to a physical one.
"""

from __future__ import annotations

from .errors import ConfigError, InvalidEventError


class NamingAssignment:
    """Bijection from logical register indices 1..m to physical indices 1..m."""

    __slots__ = ("_table",)

    def __init__(self, table):
        table = tuple(int(x) for x in table)
        m = len(table)
        if m < 1 or sorted(table) != list(range(1, m + 1)):
            raise ConfigError(f"naming table is not a permutation of 1..{m}: {table}")
        object.__setattr__(self, "_table", table)

    def __setattr__(self, name, value):
        raise AttributeError("NamingAssignment is immutable")

    @classmethod
    def identity(cls, m: int) -> "NamingAssignment":
        return cls(range(1, m + 1))

    @classmethod
    def reverse(cls, m: int) -> "NamingAssignment":
        return cls(range(m, 0, -1))

    @property
    def m(self) -> int:
        return len(self._table)

    @property
    def table(self) -> tuple:
        """Physical index for each logical index, in logical order 1..m."""
        return self._table

    def physical(self, logical: int) -> int:
        if not 1 <= logical <= len(self._table):
            raise InvalidEventError(f"logical index {logical} out of 1..{len(self._table)}")
        return self._table[logical - 1]

    def logical(self, physical: int) -> int:
        if not 1 <= physical <= len(self._table):
            raise InvalidEventError(f"physical index {physical} out of 1..{len(self._table)}")
        return self._table.index(physical) + 1

    def swapped(self, i: int, j: int) -> "NamingAssignment":
        """Assignment with the images of logical indices i and j exchanged."""
        m = len(self._table)
        if not (1 <= i <= m and 1 <= j <= m):
            raise InvalidEventError(f"swap indices ({i}, {j}) out of 1..{m}")
        t = list(self._table)
        t[i - 1], t[j - 1] = t[j - 1], t[i - 1]
        return NamingAssignment(t)

    def __eq__(self, other):
        return isinstance(other, NamingAssignment) and other._table == self._table

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(self._table)

    def __repr__(self):
        return f"NamingAssignment({list(self._table)})"

    def __reduce__(self):
        return (NamingAssignment, (self._table,))


def swap_naming(pi: NamingAssignment, i: int, j: int) -> NamingAssignment:
    """Exchange which physical registers logical indices i and j denote."""
    return pi.swapped(i, j)
