"""Exception types shared across the package."""


class RboxError(Exception):
    """Base class for all rboxkit errors."""


class ValidationError(RboxError, ValueError):
    """Invalid geometry or numeric input (non-convex quad, NaN, bad range)."""


class DegenerateGeometryError(ValidationError):
    """Zero-area quad, coincident adjacent corners, or similar collapse."""


class SingularLossError(RboxError, ArithmeticError):
    """Loss evaluated at a pole (e.g. tangent of +/-90 degrees)."""


class ParseError(RboxError, ValueError):
    """Malformed annotation/detection text. Carries offending line numbers."""

    def __init__(self, message, lines=None):
        super().__init__(message)
        self.lines = tuple(lines) if lines else ()


class DataError(RboxError, ValueError):
    """Inconsistent data sets (unknown categories, empty ground truth...)."""


class PackingError(RboxError, RuntimeError):
    """Synthetic scene generator could not place the requested objects."""
