"""Exception hierarchy shared by all isochrone modules."""


class IsochroneError(Exception):
    """Base class for every error raised by the package."""


class DomainExit(IsochroneError):
    """A state left the validity box of a system."""


class NumericalFailure(IsochroneError):
    """Base for integration and quadrature failures."""


class StepUnderflow(NumericalFailure):
    """Adaptive step fell below ``h_min``; usually a finite-time singularity.

    Attributes
    ----------
    t : float
        Time reached when the step collapsed.
    trajectory : Trajectory or None
        Accepted part of the solution.
    """

    def __init__(self, t, trajectory=None, message=None):
        self.t = float(t)
        self.trajectory = trajectory
        super().__init__(message or f"step size underflow at t={t:.17g} (blow-up suspected)")


class MaxStepsExceeded(NumericalFailure):
    def __init__(self, t, trajectory=None):
        self.t = float(t)
        self.trajectory = trajectory
        super().__init__(f"maximum number of steps exceeded at t={t:.17g}")


class QuadratureFailure(NumericalFailure):
    """Adaptive quadrature did not reach its tolerance."""


class NoReturn(IsochroneError):
    """No return to the Poincare section was found within the horizon."""


class InsufficientPoints(IsochroneError):
    """Too few table entries for finite differencing."""


class SingularTransformation(IsochroneError):
    """Jacobian determinant of a coordinate change vanished."""


class InvalidModel(IsochroneError, ValueError):
    """Model parameters violate their validity constraints."""
