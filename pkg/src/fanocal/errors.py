"""Exception hierarchy shared across the package."""


class FanocalError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(FanocalError, ValueError):
    """A model or detector parameter lies outside its allowed domain."""


class UnsupportedConfigurationError(FanocalError):
    """The operation is not defined for the given configuration."""


class InsufficientDataError(FanocalError):
    """Too few samples, runs or points for the requested analysis."""


class DegenerateRunError(FanocalError):
    """A run carries no usable Fano information (e.g. nonpositive mean)."""


class DegenerateDesignError(FanocalError):
    """The regression design matrix is rank deficient."""


class NormalizationError(FanocalError, ValueError):
    """A probability vector is not normalized within tolerance."""


class ConfigError(FanocalError, ValueError):
    """An experiment configuration is invalid."""


class FitError(FanocalError):
    """The calibration fit produced an unusable result (e.g. alpha <= 0)."""
