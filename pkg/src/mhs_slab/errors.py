"""Exception hierarchy for the solver."""


class MHSError(Exception):
    """Base class for every solver error."""


class ValidationError(MHSError):
    """Input data or configuration rejected before solving."""


class SymmetryViolation(ValidationError):
    """Spectral coefficients do not describe a real field."""


class CompatibilityViolation(ValidationError):
    """Normal data has different means on the two faces."""


class SmallnessViolation(ValidationError):
    """Boundary data is outside the perturbative regime."""


class FieldTooLarge(MHSError):
    """Vertical perturbation too close to -1 for the characteristics."""


class StepFailure(MHSError):
    """The characteristic integration produced non-finite values."""


class InversionFailure(MHSError):
    """Newton inversion of the flow map did not converge."""


class SliceMeanViolation(MHSError):
    """Vertical current has a non-zero mean on some z-slice."""


class NeumannDivergence(MHSError):
    """The inner fixed-point iteration for the inflow current diverges."""


class NonConvergence(MHSError):
    """The outer iteration did not reach the requested tolerance."""

    def __init__(self, message, contraction=float("nan")):
        super().__init__(message)
        self.contraction = contraction


class PathDependence(MHSError):
    """The force field is not a gradient within tolerance."""
