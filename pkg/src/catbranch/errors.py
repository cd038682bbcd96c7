"""Exception hierarchy.

Every error carries a machine-readable ``code`` used by the CLI diagnostics
stream.  Validation failures exit with status 1, numeric non-convergence
with status 2.
"""


class CatBranchError(Exception):
    """Base class for all package errors."""

    code = "Error"
    exit_status = 1


class ValidationError(CatBranchError):
    """A model or config violates its invariants."""

    exit_status = 1


class NumericError(CatBranchError):
    """A numeric procedure failed to converge."""

    exit_status = 2


# --- chain validation ---------------------------------------------------

class RowSumNonzero(ValidationError):
    code = "RowSumNonzero"


class NegativeOffDiagonal(ValidationError):
    code = "NegativeOffDiagonal"


class NotIrreducible(ValidationError):
    code = "NotIrreducible"


class EmptyModel(ValidationError):
    code = "EmptyModel"


# --- chain numerics -----------------------------------------------------

class SingularSystem(NumericError):
    code = "SingularSystem"


class TruncationNotConverged(NumericError):
    code = "TruncationNotConverged"


class GreenDivergent(NumericError):
    code = "GreenDivergent"


class Undecided(NumericError):
    """Recurrence detection neither stabilized nor clearly diverged."""

    code = "Undecided"


# --- model loading ------------------------------------------------------

class UnknownSite(ValidationError):
    code = "UnknownSite"


class AlphaOutOfRange(ValidationError):
    code = "AlphaOutOfRange"


class MomentOrderMissing(ValidationError):
    code = "MomentOrderMissing"


class MomentLawMismatch(ValidationError):
    code = "MomentLawMismatch"


class SiteAlreadyCatalyst(ValidationError):
    code = "SiteAlreadyCatalyst"


# --- spectral -----------------------------------------------------------

class NoConvergence(NumericError):
    code = "NoConvergence"


class BracketNotFound(NumericError):
    code = "BracketNotFound"


# --- criticality set ----------------------------------------------------

class AlphaZero(ValidationError):
    code = "AlphaZero"


class DegenerateMinor(NumericError):
    code = "DegenerateMinor"


class NoSolution(CatBranchError):
    """No admissible offspring mean solves the criticality equation."""

    code = "NoSolution"

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


# --- moments ------------------------------------------------------------

class RegimeMismatch(ValidationError):
    code = "RegimeMismatch"


# --- simulation ---------------------------------------------------------

class PopulationCapExceeded(CatBranchError):
    code = "PopulationCapExceeded"


class AllReplicatesTruncated(NumericError):
    code = "AllReplicatesTruncated"


class StiffnessFailure(NumericError):
    code = "StiffnessFailure"
