"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operand shapes are inconsistent."""


class DomainError(ValueError):
    """An argument lies outside the region where the operation is defined."""


class SingularMatrixError(ArithmeticError):
    """A matrix that must be positive definite is numerically singular."""


class PreconditionError(ValueError):
    """An input violates a documented precondition (e.g. non-unitary training)."""


class CodebookFormatError(ValueError):
    """A codebook file is corrupt or violates codebook invariants."""


class UnsupportedVersionError(CodebookFormatError):
    """A codebook file declares a format version this package cannot read."""
