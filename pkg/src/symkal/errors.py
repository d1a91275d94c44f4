"""Exception types shared across the package."""

from __future__ import annotations


class SymkalError(Exception):
    """Base class for all errors raised by this package."""


class StructureError(SymkalError):
    """A matrix does not have the shape or structure an operation requires."""


class DegenerateDimensionError(StructureError):
    """A dimension parameter is zero or negative where a positive one is required."""


class ValidationError(SymkalError):
    """An input violates a documented invariant.

    Carries the name of the violated invariant and, when meaningful, the
    measured residual that exceeded its tolerance.
    """

    def __init__(self, invariant: str, residual: float | None = None, detail: str = ""):
        self.invariant = invariant
        self.residual = residual
        msg = f"invariant violated: {invariant}"
        if residual is not None:
            msg += f" (residual {residual:.3e})"
        if detail:
            msg += f"; {detail}"
        super().__init__(msg)


class DocumentError(ValidationError):
    """A system document or report file is malformed.  Carries the field name."""

    def __init__(self, field: str, detail: str, residual: float | None = None):
        self.field = field
        super().__init__(invariant=f"document field '{field}'", residual=residual, detail=detail)


class PairingDegeneracyError(SymkalError):
    """No symplectic partner with pairing above tolerance exists for a vector."""

    def __init__(self, index: int, detail: str = ""):
        self.index = index
        msg = f"no symplectic partner above tolerance for vector {index}"
        if detail:
            msg += f"; {detail}"
        super().__init__(msg)


class RankAmbiguityError(SymkalError):
    """Rank decisions near the tolerance are mutually inconsistent.

    Carries the singular spectrum and the skew-canonical spectrum that led to
    the conflict so the caller can pick a better tolerance scale.
    """

    def __init__(self, detail: str, singular_values=None, skew_values=None):
        self.singular_values = singular_values
        self.skew_values = skew_values
        super().__init__(f"ambiguous rank decision: {detail}")


class RefinementRejectedError(SymkalError):
    """A proposed refinement pair does not reproduce the required sparsity pattern.

    ``blocks`` lists the offending (block_row, block_col) coordinates.
    """

    def __init__(self, detail: str, blocks=()):
        self.blocks = tuple(blocks)
        msg = f"refinement rejected: {detail}"
        if self.blocks:
            msg += f" at blocks {self.blocks}"
        super().__init__(msg)


class ConsistencyError(SymkalError):
    """Internal verification failed after an apparently successful computation."""

    def __init__(self, detail: str, report=None):
        self.report = report
        super().__init__(f"internal consistency check failed: {detail}")
