"""Exception types used across the package."""


class SpacetimeDDError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(SpacetimeDDError, ValueError):
    """A constructor or operation received an out-of-range parameter."""


class InterfaceNotOnGridError(InvalidParameterError):
    """The requested interface position is not a node of the uniform mesh."""


class AssumptionViolatedError(SpacetimeDDError, ValueError):
    """Declared Lipschitz/monotonicity constants violate the structural assumptions."""


class NotLinearError(SpacetimeDDError, TypeError):
    """An affine-only code path received a genuinely nonlinear coefficient set."""


class WindowTooSmallError(SpacetimeDDError, ValueError):
    """The declared truncation-tail bound exceeds the quadrature tolerance budget."""


class LinearSolveError(SpacetimeDDError, RuntimeError):
    """A sparse or dense linear solve failed (singular or non-SPD system)."""


class InnerDivergenceError(SpacetimeDDError, RuntimeError):
    """The damped inner fixed-point iteration diverged."""


class ConfigError(SpacetimeDDError, ValueError):
    """An experiment configuration file failed schema validation."""
