"""Exception types shared across the package."""


class AnonMutexError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AnonMutexError):
    """Invalid configuration (register count, variant, flag combination)."""


class InvalidEventError(AnonMutexError):
    """An event is malformed or not applicable in the current state."""


class ReplayDivergenceError(AnonMutexError):
    """Replaying a run produced a value that contradicts the recorded one."""


class ProtocolError(AnonMutexError):
    """A program was stepped with a read result it did not expect (or vice versa)."""


class SwapPreconditionError(AnonMutexError):
    """A register-swap was attempted on a register that has been written."""


class ExtensionPreconditionError(AnonMutexError):
    """Run extension requested without the required looks-like relation."""


class ConstructionInvariantError(AnonMutexError):
    """An adversary construction reached a state its own invariants rule out."""


class SymmetryViolationError(AnonMutexError):
    """A process was poised to enter its critical section from a symmetric state."""


class CapExceededError(AnonMutexError):
    """A step budget ran out before the driven process reached its target."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class StalledProcessError(AnonMutexError):
    """A driven process neither wrote nor entered its critical section in time."""


class UnknownQuiescentError(AnonMutexError):
    """A quiescent state was reached that is not in the registry."""


class ScenarioError(AnonMutexError):
    """A scenario file is malformed or its schedule diverged."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index
