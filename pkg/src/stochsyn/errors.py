"""Exception hierarchy shared across the package."""

__all__ = [
    "StochsynError",
    "FeatureEvaluationError",
    "DatasetParseError",
    "LinearAlgebraError",
    "UnsupportedCovarianceError",
    "InvariantViolationError",
    "MissingTransitionError",
    "DfaLoadError",
    "ControllerStateError",
    "StageDependencyError",
    "ConfigError",
]


class StochsynError(Exception):
    """Base class for all package-specific errors."""


class FeatureEvaluationError(StochsynError):
    """A feature library returned non-finite or wrongly shaped values."""


class DatasetParseError(StochsynError):
    """A dataset file is malformed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class LinearAlgebraError(StochsynError):
    """A required factorization or eigendecomposition failed."""


class UnsupportedCovarianceError(StochsynError):
    """The abstraction requires a diagonal noise covariance."""


class InvariantViolationError(StochsynError):
    """A numeric invariant (marginal domination, mass bounds, ...) broke."""


class MissingTransitionError(StochsynError):
    """A DFA has no transition for the observed letter."""


class DfaLoadError(StochsynError):
    """A DFA file is invalid (nondeterministic, dangling state, ...)."""


class ControllerStateError(StochsynError):
    """A refined controller was used before being initialized."""


class StageDependencyError(StochsynError):
    """A pipeline stage is missing a predecessor's artifact."""


class ConfigError(StochsynError):
    """A run configuration is invalid; message names the offending field."""
