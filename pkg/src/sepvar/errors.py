"""Exception types shared across the engine.

Every error that a caller can act on carries a stable class name; the CLI
maps class names to machine-readable error codes.
"""


class SepvarError(Exception):
    """Base class for all engine errors."""


class DimensionMismatch(SepvarError):
    """Operands live on charts of different dimension."""


class TruncationInsufficient(SepvarError):
    """A requested output order exceeds the effective truncation order."""


class NonUnitLeading(SepvarError):
    """Reciprocal of a jet whose constant term is not invertible."""


class FiberDegreeTooLow(SepvarError):
    """A Hamiltonian generator has terms of fiber degree below two."""


class DivisibilityError(SepvarError):
    """An operator expected to be divisible by the formal parameter is not."""


class NotNatural(SepvarError):
    """A graded operator violates the order-per-grade bound."""


class DegenerateHessian(SepvarError):
    """A potential Hessian is singular at the base point."""


class JacobiViolation(SepvarError):
    """A tensor fails the holomorphic Jacobi identities."""


class InconsistentRecursion(SepvarError):
    """The two reconstruction routes of the degree recursion disagree.

    Signals either an input tensor that does not satisfy the Jacobi
    identities or an implementation bug.
    """


class ShapeViolation(SepvarError):
    """An operator grade has terms outside its required derivative span."""


class SharedBodyViolation(SepvarError):
    """Two star products expected to share their leading potential do not."""


class PurityError(SepvarError):
    """An input is not purely holomorphic/antiholomorphic as required."""


class GeometryFormatError(SepvarError):
    """A geometry description file is malformed."""
