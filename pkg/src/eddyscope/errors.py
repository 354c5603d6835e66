"""Exception types shared across the package."""


class EddyscopeError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(EddyscopeError):
    """Grid/image dimensions are inconsistent or invalid."""


class DataError(EddyscopeError):
    """File contents violate the declared format (size, finiteness, ...)."""


class ArgumentError(EddyscopeError):
    """An argument is outside its documented range."""


class FitError(EddyscopeError):
    """Not enough ensemble members for the requested distribution model."""


class SamplingError(EddyscopeError):
    """A continuous sample position lies outside the grid."""


class CameraError(EddyscopeError):
    """Degenerate camera configuration."""


class SelectionError(EddyscopeError):
    """No simplification threshold achieves the requested agreement."""


class ConsistencyError(EddyscopeError):
    """Cross-structure bookkeeping violated (e.g. unlabeled maximum)."""
