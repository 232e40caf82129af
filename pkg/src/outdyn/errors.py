"""Exception types shared across the package."""


class OutdynError(Exception):
    """Base class."""


class StructuralError(OutdynError):
    """Input violates a structural invariant (non-composable path, bad graph)."""


class DomainError(OutdynError):
    """Input lies outside the domain of an operation."""


class ValidationError(OutdynError):
    """A supplied object fails validation; ``witness`` names the offender."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NumericError(OutdynError):
    """Iterative numeric routine failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CapExhausted(OutdynError):
    """A search or iteration hit its configured cap."""


class ParseFailure(OutdynError):
    """A path could not be parsed into splitting units."""

    def __init__(self, message, unit=None):
        super().__init__(message)
        self.unit = unit
