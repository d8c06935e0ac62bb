"""Exception hierarchy shared across the solver layers."""


class SCLPError(Exception):
    """Base class for solver failures."""


class InvalidNetworkError(SCLPError, ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("invalid network:\n  " + "\n  ".join(self.diagnostics))


class SingularBasisError(SCLPError):
    """A basis matrix could not be factorized (e.g. a non-adjacent pivot)."""


class LPFailure(SCLPError):
    """An LP finished with a status other than optimal."""

    def __init__(self, status, message=""):
        self.status = status
        super().__init__(f"LP {status}: {message}" if message else f"LP {status}")


class RatesLPError(LPFailure):
    """Rates-LP infeasible or unbounded for a given sign pattern (K, J)."""

    def __init__(self, status, K, J):
        self.K = tuple(sorted(K))
        self.J = tuple(sorted(J))
        super().__init__(status, f"Rates-LP(K={list(self.K)}, J={list(self.J)})")


class DegeneracyError(SCLPError):
    """A collision tie or a zero step was met during the parametric sweep."""

    def __init__(self, theta, tied, message="degenerate collision"):
        self.theta = theta
        self.tied = list(tied)
        super().__init__(f"{message} at theta={theta:.12g}; tied set: {self.tied}")


class RobustInfeasibleError(SCLPError):
    def __init__(self, K, J, message="robust Rates-LP infeasible"):
        self.K = tuple(sorted(K))
        self.J = tuple(sorted(J))
        super().__init__(f"{message} for K*={list(self.K)}, J*={list(self.J)}")


class MappingVerificationError(SCLPError):
    """Mapped RC duals or primal certificates fail their feasibility check."""
