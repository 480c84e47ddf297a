"""Exception hierarchy. The CLI maps each family to an exit code."""


class TensionNetError(Exception):
    exit_code = 1


class ValidationError(TensionNetError, ValueError):
    """Malformed input: bad topology, out-of-range parameters, wrong dimension."""

    exit_code = 2


class NumericalError(TensionNetError, ArithmeticError):
    """A solver failed: singular system, divergence, non-convergence."""

    exit_code = 3


class ManufacturabilityError(TensionNetError):
    """The design cannot be printed as requested (e.g. infeasible arc ratio)."""

    exit_code = 4


class DegenerateEdgeError(ValidationError):
    pass


class UnanchoredNetworkError(ValidationError):
    pass


class FormFindingSingularError(NumericalError):
    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class StressRangeError(ManufacturabilityError):
    def __init__(self, message, sigma_max=None, edge=None):
        super().__init__(message)
        self.sigma_max = sigma_max
        self.edge = edge


class RelaxationDivergedError(NumericalError):
    pass


class UnresolvableCrossingsError(NumericalError):
    pass


class ArcInfeasibleError(ManufacturabilityError):
    pass


class EquilibriumNotFoundError(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
