class ConfigurationError(ValueError):
    """Invalid configuration (CLI exit code 2)."""


class EstimationError(RuntimeError):
    """The sensing estimator cannot run on the given measurement."""


class GeometryError(ValueError):
    """Degenerate bistatic geometry."""


class SingularFisherError(ArithmeticError):
    """The Fisher information matrix cannot be inverted."""
