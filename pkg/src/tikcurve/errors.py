"""Exception types raised across the package."""


class TikcurveError(Exception):
    """Base class for all package errors."""


class DegenerateJacobianError(TikcurveError, ValueError):
    """The parametrization derivative vanishes (|m'(t)| below threshold)."""


class GridTooSmallError(TikcurveError, ValueError):
    """A parameter grid has too few nodes for the requested operation."""


class GridMismatchError(TikcurveError, ValueError):
    """Two discrete objects do not live on the same parameter grid."""


class NonTangentError(TikcurveError, ValueError):
    """A field expected to be tangent has a normal component."""


class TooFewKnotsError(TikcurveError, ValueError):
    """Spline step too large for the parameter domain."""


class RegularityLostError(TikcurveError, ValueError):
    """A fitted spline is no longer a regular curve."""


class DomainMismatchError(TikcurveError, ValueError):
    """Two curves do not share the same parameter domain."""


class CurvesTooCloseError(TikcurveError, ValueError):
    """Source and target curves are too close for the kernel to be smooth."""


class SolverError(TikcurveError, RuntimeError):
    """A linear solve failed (singular or indefinite system)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(TikcurveError, ValueError):
    """An experiment configuration or schedule is invalid."""
