"""Exception types shared across the library."""

__all__ = [
    "AllWeightsZero",
    "NotNormalized",
    "BudgetExceedsN",
    "NonFiniteGradient",
    "UnsupportedModel",
    "SingularInnovation",
    "DimensionMismatch",
    "InvalidParam",
    "NonPositivePrice",
    "InsufficientChain",
    "ZeroDenominator",
    "ConfigError",
]


class AllWeightsZero(ValueError):
    """Every raw log-weight is -inf: total particle degeneracy."""


class NotNormalized(ValueError):
    """Operation requires a normalized particle ensemble."""


class BudgetExceedsN(ValueError):
    """Nudge budget M exceeds the ensemble size N."""


class NonFiniteGradient(FloatingPointError):
    """A likelihood gradient contains NaN or Inf entries."""


class UnsupportedModel(TypeError):
    """The filter requires model structure this model does not expose."""


class SingularInnovation(ValueError):
    """Innovation covariance is not invertible."""


class DimensionMismatch(ValueError):
    """Array shapes disagree with the declared model dimensions."""


class InvalidParam(ValueError):
    """A model parameter violates its support constraint."""


class NonPositivePrice(ValueError):
    """Price series contains a non-positive entry."""


class InsufficientChain(ValueError):
    """Chain is too short for the requested diagnostic."""


class ZeroDenominator(ValueError):
    """Reference trajectory has zero norm; NMSE undefined."""


class ConfigError(ValueError):
    """Experiment configuration could not be parsed or validated."""
