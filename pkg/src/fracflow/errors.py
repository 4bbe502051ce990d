"""Exception hierarchy shared across the package."""


class FracflowError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(FracflowError, ValueError):
    """Invalid geometric input (degenerate cell, point outside domain, ...)."""


class ConformityError(GeometryError):
    """A fracture path does not line up with mesh edges."""


class UnsupportedTopologyError(GeometryError):
    """Fracture arrangement the splitter cannot represent.

    The main case: a fracture tip that ends strictly inside a subdomain,
    touching neither the domain boundary nor another fracture.
    """


class ConfigurationError(FracflowError, ValueError):
    """Inconsistent problem setup (bad tags, coefficient signs, config keys)."""


class SolverError(FracflowError, RuntimeError):
    """Linear solver failure (non-finite values, unusable matrix)."""


class NonConvergenceError(SolverError):
    """Iteration budget exhausted; carries the partial report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
