"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid model parameters, policy handles, or run configuration."""


class OutOfRangeError(ValueError):
    """A time argument falls outside the generated horizon."""


class EstimationError(RuntimeError):
    """A Monte Carlo estimate cannot be formed from the available samples."""
