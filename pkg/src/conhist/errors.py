"""Exception hierarchy shared by every module."""

from __future__ import annotations


class HistoriesError(Exception):
    """Base class for all errors raised by conhist."""


class ShapeError(HistoriesError, ValueError):
    pass


class DomainError(HistoriesError, ValueError):
    pass


class NumericError(HistoriesError, ArithmeticError):
    pass


class UnknownLabelError(HistoriesError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class UnsupportedStructureError(DomainError):
    """Operation is only defined for product (non branch-dependent) families."""


class IncompleteFamilyError(DomainError):
    """The chain operators of a family do not sum to the identity."""

    def __init__(self, residual: float, message: str | None = None):
        self.residual = residual
        super().__init__(message or f"family is incomplete: |sum C - I| = {residual:.3e}")


class InconsistentFamilyError(DomainError):
    """Probability assignment refused because the family does not decohere."""

    def __init__(self, report, message: str | None = None):
        self.report = report
        n = len(report.violations)
        super().__init__(
            message
            or f"family violates the {report.condition} decoherence condition "
            f"({n} pair{'s' if n != 1 else ''} above epsilon={report.epsilon:g})"
        )


class DegeneratePosteriorError(NumericError):
    """The time-symmetric normalization sum vanishes (initial and final states incompatible)."""
