"""Exception hierarchy shared across the package.

Recovery runs treat most of these as *data* (a failed trial), not as bugs:
the harness catches RecoveryFailure subclasses and records the failure kind.
"""


class MixrecError(Exception):
    """Base class for all package errors."""


class ConfigError(MixrecError):
    """Invalid user-supplied configuration (CLI exits with status 2)."""


class ConstructionError(MixrecError):
    """Infeasible instance or family construction request."""


class ModelMismatchError(MixrecError):
    """An oracle was queried with the wrong model's query type."""


class VerificationInfeasibleError(MixrecError):
    """Exhaustive family verification would exceed the work guard."""


class RecoveryFailure(MixrecError):
    """Base class for failures that abort a single recovery trial."""

    kind = "failure"


class CffDeficiencyError(RecoveryFailure):
    """No CFF row isolates the requested index subset; rebuild with a new seed."""

    kind = "cff-deficiency"


class InconsistencyError(RecoveryFailure):
    """Estimated counts are mutually inconsistent (negative or out of range)."""

    kind = "inconsistency"


class StuckError(RecoveryFailure):
    """The pattern-elimination loop found no qualifying (C, a) pair."""

    kind = "stuck"


class NegativeCountError(RecoveryFailure):
    """A table update drove a count below zero."""

    kind = "negative-count"


class RankDeficientError(RecoveryFailure):
    """Slice matrices have lower rank than the expected factor count."""

    kind = "rank-deficient"


class ReconstructionMismatchError(RecoveryFailure):
    """A candidate decomposition does not reproduce the tensor exactly."""

    kind = "reconstruction-mismatch"


class NoDecompositionError(RecoveryFailure):
    """Exhaustive search found no exact rank-one decomposition."""

    kind = "no-decomposition"


class EnumerationBudgetExceededError(RecoveryFailure):
    """Brute-force decomposition search exceeded its node budget."""

    kind = "enumeration-budget"


class AllFlipsFailedError(RecoveryFailure):
    """Every candidate flip set failed tensor decomposition."""

    kind = "all-flips-failed"
