"""Exceptions raised by the simulator."""


class HandshakeError(Exception):
    """Base class for every error raised by this package."""


class SpaceMismatchError(HandshakeError, ValueError):
    """Operands live on different (ordered, labeled) bases."""


class NormalizationError(HandshakeError, ValueError):
    """A state that must be normalized is not."""


class ConstructionError(HandshakeError, ValueError):
    """A vector or operator fails its construction checks."""


class InvalidAbsorberSetError(HandshakeError, ValueError):
    """Absorber projectors that must be mutually orthogonal are not."""


class InvalidStageError(HandshakeError, ValueError):
    """The confirmation weights of one stage add up to more than one."""


class InvalidCascadeError(HandshakeError, ValueError):
    """A cascade breaks its stage ordering or absorber invariants."""


class ConservationViolationError(HandshakeError, RuntimeError):
    """A live incipient transaction does not conserve the entangling quantity."""

    def __init__(self, message: str, violations: tuple = ()):
        super().__init__(message)
        self.violations = violations


class ScenarioNotFoundError(HandshakeError, LookupError):
    """No scenario is registered under the requested name."""


class ParameterError(HandshakeError, ValueError):
    """A scenario parameter override is unknown or out of range."""


class UsageError(HandshakeError):
    """Bad flags, environment or output location."""
