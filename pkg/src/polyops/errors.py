"""Exception hierarchy shared by every polyops module."""


class PolyopsError(Exception):
    """Base class for all errors raised by polyops."""


class InputError(PolyopsError, ValueError):
    """Malformed or non-finite input data."""


class ResourceError(PolyopsError):
    """Problem size exceeds a configured cap."""


class NumericalError(PolyopsError):
    """An iterative routine failed to converge.

    ``partial`` carries whatever was computed before the failure.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SingularityError(NumericalError):
    """A linear system is numerically singular."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class DomainError(PolyopsError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConditioningError(NumericalError):
    """A construction is too ill-conditioned to be trusted."""


class DecompositionError(NumericalError):
    """Root continuation produced discontinuous branches."""


class ContourError(PolyopsError):
    """An eigenvalue lies too close to an integration contour."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class LemniscateError(ContourError):
    """A lemniscate level set has the wrong topology or could not be traced."""


class SelectionError(PolyopsError):
    """No admissible radius could be selected."""


class VerificationError(PolyopsError):
    """A numerical verification could not be carried out."""


class ContractError(PolyopsError):
    """A documented precondition of an operation is violated."""


class ClassError(PolyopsError):
    """The operator cannot belong to the requested class."""
