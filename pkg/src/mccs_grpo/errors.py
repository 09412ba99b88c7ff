"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """An argument or configuration value is outside its valid range."""


class StructuralError(ValueError):
    """Input data has the wrong shape (e.g. a label vector of the wrong length)."""


class NumericalFault(ArithmeticError):
    """A non-finite value appeared where a finite one is required."""


class RewardError(RuntimeError):
    """A reward function failed while scoring a candidate."""
