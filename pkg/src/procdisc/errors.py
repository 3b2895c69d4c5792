"""Exception hierarchy shared by all modules."""


class ProcDiscError(Exception):
    """Base class for package errors."""


class LabelError(ProcDiscError, ValueError):
    """Unknown, duplicated or dimension-mismatched subsystem label."""


class NotHermitianError(ProcDiscError, ValueError):
    pass


class DomainError(ProcDiscError, ValueError):
    """Input outside the mathematical domain of an operation (e.g. a negative
    eigenvalue handed to a PSD square root)."""


class ValidationError(ProcDiscError, ValueError):
    """Object fails a structural condition (state, channel, comb, process matrix)."""


class SolverError(ProcDiscError, RuntimeError):
    """Raised when an SDP does not reach an optimal status.

    The failing :class:`~procdisc.sdp_engine.SdpSolution` is attached as
    ``solution`` so callers can inspect the status and residuals.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
