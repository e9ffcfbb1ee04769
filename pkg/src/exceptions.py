"""
Custom exceptions for opalgs.

Provides specific exception types for the different failure modes of the
linear algebra layer, the algebra analyses and the document formats.
"""


class OpalgsError(Exception):
    """Base exception for all opalgs errors."""

    pass


class DimensionMismatchError(OpalgsError):
    """Operands live in spaces of different dimensions."""

    def __init__(self, message: str, expected: int = None, actual: int = None):
        self.expected = expected
        self.actual = actual

        full_message = message
        if expected is not None and actual is not None:
            full_message += f" (expected {expected}, got {actual})"

        super().__init__(full_message)


class ContainmentError(OpalgsError):
    """A subspace that must be contained in another is not."""

    pass


class RankDeficiencyError(OpalgsError):
    """Vectors that must be linearly independent are not."""

    def __init__(self, message: str, index: int = None):
        self.index = index
        full_message = message
        if index is not None:
            full_message += f" (first dependent vector at position {index})"
        super().__init__(full_message)


class SingularMatrixError(OpalgsError):
    """A matrix that must be invertible is singular (or numerically so)."""

    pass


class PreconditionError(OpalgsError):
    """An operation was called on inputs that violate its preconditions."""

    def __init__(self, message: str, operation: str = None, details: str = None):
        self.operation = operation
        self.details = details

        full_message = message
        if operation:
            full_message = f"{operation}: {full_message}"
        if details:
            full_message += f": {details}"

        super().__init__(full_message)


class NotInvariantError(PreconditionError):
    """A subspace supplied as invariant is not invariant for the algebra."""

    pass


class NotNilpotentError(PreconditionError):
    """A nilpotent algebra was required."""

    pass


class InvalidPreorderError(PreconditionError):
    """A relation is not reflexive and transitive."""

    pass


class UnsupportedProvenanceError(PreconditionError):
    """No exact classification exists for an algebra of this provenance."""

    pass


class NotJordanesqueError(PreconditionError):
    """A matrix is not Jordanesque in the given block ordered basis."""

    def __init__(self, message: str, violation: tuple = None):
        self.violation = violation
        full_message = message
        if violation is not None:
            full_message += f" (violation at row {violation[0]}, column {violation[1]})"
        super().__init__(full_message)


class JordanesqueConstructionError(OpalgsError):
    """The Jordanesque basis construction could not place a vector.

    Raised when the input algebra is not hereditarily antisymmetric.
    """

    def __init__(self, message: str, step: int = None):
        self.step = step
        full_message = message
        if step is not None:
            full_message += f" (at basis vector {step})"
        super().__init__(full_message)


class EigenvalueError(OpalgsError):
    """Base class for eigenvalue selection problems."""

    pass


class EigenvalueAmbiguityError(EigenvalueError):
    """Numeric eigenvalues cluster too closely to be separated; rerun in exact mode."""

    pass


class EigenvalueNotFoundError(EigenvalueError):
    """The requested value is not an eigenvalue of the matrix."""

    pass


class UnsupportedEigenvalueError(EigenvalueError):
    """The idempotent polynomial construction needs a nonzero eigenvalue."""

    pass


class GuardExceededError(OpalgsError):
    """An exhaustive enumeration was requested beyond its size guard."""

    def __init__(self, message: str, limit: int = None, requested: int = None):
        self.limit = limit
        self.requested = requested
        full_message = message
        if limit is not None and requested is not None:
            full_message += f" (limit {limit}, requested {requested})"
        super().__init__(full_message)


class CPTPViolationError(OpalgsError):
    """Kraus matrices do not satisfy sum K*K = I."""

    def __init__(self, message: str, residual: float = None):
        self.residual = residual
        full_message = message
        if residual is not None:
            full_message += f" (residual {residual:.3e})"
        super().__init__(full_message)


class BudgetExhaustedError(OpalgsError):
    """A randomized construction ran out of attempts."""

    pass


class DocumentFormatError(OpalgsError):
    """A document could not be parsed."""

    def __init__(self, message: str, path: str = None, field: str = None):
        self.path = path
        self.field = field

        full_message = message
        if field:
            full_message += f" (field '{field}')"
        if path:
            full_message += f" in {path}"

        super().__init__(full_message)
