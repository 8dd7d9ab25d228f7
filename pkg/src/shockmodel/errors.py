"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid model, distribution or run configuration.

    ``field`` names the offending configuration key when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        self.reason = message
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class IncrementRangeError(IndexError):
    """Index past the end of a finite increment sequence."""


class DegenerateModelError(ValueError):
    """The model cannot produce the requested quantity (e.g. no shock can ever matter)."""


class DegenerateUrnError(ValueError):
    """Urn with no balls left to draw."""


class StateBudgetExceeded(MemoryError):
    """Exact state enumeration would exceed the configured budget."""

    def __init__(self, message, n_states=None):
        self.n_states = n_states
        super().__init__(message)


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        self.achieved = achieved
        super().__init__(message)


class InternalConsistencyError(AssertionError):
    """An analytic quantity left its valid range."""
