"""Exceptions and warnings raised by the dpmilp package."""


class DPMILPError(Exception):
    """Base class of every error raised by dpmilp."""


class DPMILPWarning(UserWarning):
    """Solver diagnostics: the result is usable but an assumption looks violated."""


class ValidationError(DPMILPError):
    """Raised when a problem instance fails validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"{len(self.violations)} validation error(s):\n{lines}")


class InstanceFormatError(DPMILPError):
    """Raised when an instance file cannot be parsed."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class EnumerationCapError(DPMILPError):
    """Raised when an enumeration oracle would exceed its configured cap."""


class SizeCapError(DPMILPError):
    """Raised when an instance is too large for an exact global oracle."""


class InfeasibleBlockError(DPMILPError):
    """Raised when a block's mixed-integer set X_i is empty."""


class LPNumericalError(DPMILPError):
    """Raised when the simplex cannot meet its invariants (ill-conditioning)."""


class NodeBudgetError(DPMILPError):
    """Raised when branch and bound exceeds its node budget."""


class PricingCapError(DPMILPError):
    """Raised when column generation exceeds its pricing-round cap."""


class DisconnectedGraphError(DPMILPError):
    """Raised when a communication graph is not connected."""


class GraphGenerationError(DPMILPError):
    """Raised when no connected random graph was sampled within the attempt budget."""


class MissingSlaterError(DPMILPError):
    """Raised when a bound needs a Slater margin and none was certified."""


class ConfigError(DPMILPError):
    """Raised on an invalid run configuration; ``field`` is the dotted key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
