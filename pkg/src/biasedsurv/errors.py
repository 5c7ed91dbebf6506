"""Exception types shared across the package."""


class BiasedSurvError(Exception):
    """Base class for all package errors."""


class DomainError(BiasedSurvError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class EstimationError(BiasedSurvError, RuntimeError):
    """An estimator cannot produce a valid result from the given data."""


class ConfigurationError(BiasedSurvError, ValueError):
    """A configuration value or file is invalid."""


class DataFormatError(BiasedSurvError, ValueError):
    """A dataset file violates the documented schema."""


class ExperimentError(BiasedSurvError, RuntimeError):
    """A replicated experiment failed beyond the tolerated failure rate."""
