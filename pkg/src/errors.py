"""Exception hierarchy shared by all modules."""


class IonChainError(Exception):
    """Base class for every error raised by the laboratory."""


class DomainError(IonChainError, ValueError):
    """A precondition on the inputs does not hold."""


class SingularityError(DomainError):
    """Two ions coincide, so the Coulomb energy diverges."""


class OrbitEscapeError(DomainError):
    """The recursive ion map produced a non-positive effective momentum."""


class SaddlePointError(DomainError):
    """A spectrum was requested at a configuration that is not a minimum."""


class ConvergenceError(IonChainError):
    """An iterative search finished without an acceptable result."""
