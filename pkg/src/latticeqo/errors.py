"""Exception types shared across the package."""


class LatticeQOError(Exception):
    """Base class for all package errors."""


class ValidationError(LatticeQOError, ValueError):
    """Invalid specification, configuration, or argument."""


class SolverError(LatticeQOError, RuntimeError):
    """Numerical routine failed or its preconditions cannot be met."""


class NonDifferentiableError(LatticeQOError, ValueError):
    """Analytic gradient requested at a point where the band is singular."""
