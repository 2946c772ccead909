"""Exception hierarchy shared by every module of the package."""


class CFLError(Exception):
    """Base class for all errors raised by cfl."""


class ParameterError(CFLError, ValueError):
    """Model or operation parameters are outside their admissible range."""


class DomainError(CFLError, ValueError):
    """A chart point (or a finite-difference stencil around it) leaves the chart."""


class ModelError(CFLError):
    """The model does not provide the data an operation needs."""


class PreconditionError(CFLError):
    """A hypothesis required by a check does not hold on the supplied data."""


class HypothesisError(PreconditionError):
    """A theorem hypothesis (e.g. q1 >= q2, X2(K) = 0) is violated."""


class InapplicableError(PreconditionError):
    """None of the alternative hypotheses of an estimate is satisfied."""


class IdenticallyZero(PreconditionError):
    """The function under study vanishes on the whole window."""


class ChartExitError(CFLError):
    """A trajectory left the chart domain before the requested time."""

    def __init__(self, message, exit_time):
        super().__init__(message)
        self.exit_time = exit_time


class StiffnessError(CFLError):
    """The adaptive step size collapsed."""


class NoReturnError(CFLError):
    """No crossing of the return section was found within the horizon."""


class NonConvergence(CFLError):
    """An iterative refinement failed to reach its tolerance."""


class SelfCheckError(CFLError):
    """An internal consistency check failed."""


class WindowTooSmall(CFLError):
    """The spectral window does not bracket the sign change of the eigenvalues."""


class DegenerateEigenfunction(CFLError):
    """A computed eigenfunction (nearly) vanishes; refine the grid."""
