"""Exception types shared across the package."""

from __future__ import annotations


class DimensionMismatchError(ValueError):
    """Operands were built for different numbers of spin variables."""


class SingularMatrixError(ValueError):
    """A mod-2 matrix that should be invertible is not.

    Raised by matrix inversion; search code treats it as "candidate
    basis rejected".
    """


class DatasetFormatError(ValueError):
    """An input file violates the dataset or side-file format."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class CapExceededError(RuntimeError):
    """A configured size cap would be exceeded by the requested run."""


class BoundaryModelError(ValueError):
    """A fitted probability cell is zero, so couplings diverge.

    The probability-table representation of the block stays valid; only
    the coupling parameterization has no finite value.
    """
