"""Exception hierarchy shared by all qrf modules."""


class QRFError(Exception):
    """Base class for every error raised by qrf."""


class DimensionError(QRFError, ValueError):
    """Operand shapes do not fit together."""


class SizeError(DimensionError):
    """A result would exceed the configured maximum number of entries."""


class NormalizationError(QRFError, ValueError):
    """A vector expected to have unit norm does not."""


class SymmetryError(QRFError, ValueError):
    """A matrix expected to be Hermitian is not."""


class DomainError(QRFError, ValueError):
    """An operation received an argument outside its domain (e.g. an empty set)."""


class ModelValidationError(QRFError, ValueError):
    """A model file or model object violates the schema or its invariants."""


class ConstraintViolationError(QRFError, ValueError):
    """Coefficient data names a configuration that does not solve the constraint."""


class PreconditionError(QRFError):
    """A runtime precondition of an operation does not hold."""


class OverlapError(PreconditionError):
    """A state leaks outside the sector overlap required by a frame change."""

    def __init__(self, message: str, leaked_norm: float):
        super().__init__(message)
        self.leaked_norm = leaked_norm


class ConventionError(PreconditionError):
    """Neither orientation-conjugation sign yields a Dirac observable."""


class NoNativeFactorizationError(PreconditionError):
    """The reduced space of a frame does not inherit the kinematical split."""


class SpaceMismatchError(QRFError, TypeError):
    """Two labeled operators living on different spaces were combined."""
