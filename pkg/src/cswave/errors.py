"""Exception types shared across the package.

PreconditionError maps to CLI exit code 2, SolverDivergenceError to exit
code 3 (strict mode only).  Everything derives from CswaveError so callers
can catch package failures in one place.
"""


class CswaveError(Exception):
    pass


class PreconditionError(CswaveError):
    """Invalid argument or unsatisfiable parameter combination."""


class UnsupportedOrderError(PreconditionError):
    """Wavelet order outside the supported range."""


class BudgetError(PreconditionError):
    """Measurement budget too small (or inconsistent) for the requested recipe."""


class CapExceededError(PreconditionError):
    """A desk-scale size cap would be exceeded."""


class InfeasibleError(CswaveError):
    """No feasible point found (solver or oracle)."""


class SolverDivergenceError(CswaveError):
    """Solver failed to converge and strict mode was requested."""
