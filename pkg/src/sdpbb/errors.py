"""Exception hierarchy shared by all sdpbb modules."""


class SdpbbError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SdpbbError, ValueError):
    """A dimension is invalid or two operands do not conform."""


class HermitianError(SdpbbError, ValueError):
    """A matrix that must be self-adjoint is not."""


class InvalidInputError(SdpbbError, ValueError):
    """Input data is malformed (non-finite entries, bad ranges, unknown names)."""


class NumericalError(SdpbbError, RuntimeError):
    """A numerical routine failed to converge or produced unusable output."""


class ConfigurationError(SdpbbError, ValueError):
    """Solver options are inconsistent or outside their admissible range."""


class InfeasibleProblemError(SdpbbError):
    """The feasible set of a problem is empty."""


class UnboundedFeasibleRegionError(SdpbbError):
    """The feasible set is not compact, so no bounding rectangle exists."""


class NodeError(SdpbbError):
    """A subproblem solve failed inside the branch-and-bound loop.

    Carries the rectangle and solver status of the failing node.
    """

    def __init__(self, message, *, node_id=None, status=None):
        super().__init__(message)
        self.node_id = node_id
        self.status = status
