"""Process identifiers and the values an anonymous register can hold.

A register holds one of three things: the free marker, the waiting marker,
or a process identifier.  Identifiers are opaque: code built on top of this
module may compare them for equality and nothing else.
"""

from __future__ import annotations

from .errors import InvalidEventError


class ProcessId:
    """Opaque process identifier.

    Wraps a positive integer but deliberately exposes no ordering,
    arithmetic, or parity.  Two instances are equal iff they wrap the same
    integer.  Use :func:`token_of` (infrastructure only) when a stable
    serialization token is needed.
    """

    __slots__ = ("_token",)

    def __init__(self, token: int):
        if not isinstance(token, int) or token < 1:
            raise ValueError("process identifier must be a positive integer")
        object.__setattr__(self, "_token", token)

    def __setattr__(self, name, value):
        raise AttributeError("ProcessId is immutable")

    def __eq__(self, other):
        return isinstance(other, ProcessId) and other._token == self._token

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(("pid", self._token))

    def __repr__(self):
        return f"P{self._token}"

    def __reduce__(self):
        return (ProcessId, (self._token,))


def token_of(pid: ProcessId) -> int:
    """Integer payload of an identifier.

    Infrastructure helper for serialization and deterministic ordering of
    reports.  Programs under test never see this; the symmetry tests verify
    that observable behaviour survives arbitrary relabeling.
    """
    return pid._token


class RegisterValue:
    """Tagged union: Free | Waiting | Owned(ProcessId)."""

    __slots__ = ("_tag", "_owner")

    _FREE_TAG = 0
    _WAITING_TAG = 1
    _OWNED_TAG = 2

    def __init__(self, tag: int, owner: ProcessId | None = None):
        if tag == self._OWNED_TAG and owner is None:
            raise ValueError("owned value needs an owner")
        if tag != self._OWNED_TAG and owner is not None:
            raise ValueError("only owned values carry an owner")
        object.__setattr__(self, "_tag", tag)
        object.__setattr__(self, "_owner", owner)

    def __setattr__(self, name, value):
        raise AttributeError("RegisterValue is immutable")

    @property
    def is_free(self) -> bool:
        return self._tag == self._FREE_TAG

    @property
    def is_waiting(self) -> bool:
        return self._tag == self._WAITING_TAG

    @property
    def is_owned(self) -> bool:
        return self._tag == self._OWNED_TAG

    @property
    def owner(self) -> ProcessId | None:
        return self._owner

    def owned_by(self, pid: ProcessId) -> bool:
        return self._tag == self._OWNED_TAG and self._owner == pid

    def __eq__(self, other):
        return (
            isinstance(other, RegisterValue)
            and other._tag == self._tag
            and other._owner == self._owner
        )

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash((self._tag, self._owner))

    def __repr__(self):
        if self.is_free:
            return "Free"
        if self.is_waiting:
            return "Waiting"
        return f"Owned({self._owner!r})"

    def __reduce__(self):
        return (RegisterValue, (self._tag, self._owner))

    def token(self) -> str:
        """Serialization token: ``0``, ``W``, or ``id:<n>``."""
        if self.is_free:
            return "0"
        if self.is_waiting:
            return "W"
        return f"id:{token_of(self._owner)}"


FREE = RegisterValue(RegisterValue._FREE_TAG)
WAITING = RegisterValue(RegisterValue._WAITING_TAG)


def owned(pid: ProcessId) -> RegisterValue:
    """Register value holding ``pid``."""
    return RegisterValue(RegisterValue._OWNED_TAG, pid)


def parse_value(text: str) -> RegisterValue:
    """Inverse of :meth:`RegisterValue.token`."""
    if text == "0":
        return FREE
    if text == "W":
        return WAITING
    if text.startswith("id:"):
        return owned(ProcessId(int(text[3:])))
    raise InvalidEventError(f"unknown register value token: {text!r}")
