"""Exception and warning types shared across the package."""


class IntegrationError(RuntimeError):
    """An ODE integration could not reach the end of its time span.

    Attributes
    ----------
    t_reached : float
        Last time the integrator successfully stepped to.
    component : int or None
        Index of the state component implicated in the failure, when it
        can be attributed (non-finite entry or dominant error term).
    """

    def __init__(self, message, t_reached, component=None):
        super().__init__(message)
        self.t_reached = t_reached
        self.component = component


class NumericalInconsistencyError(RuntimeError):
    """A quantity that should be real (or otherwise constrained) is not.

    Carries the offending residue magnitude in ``residue``.
    """

    def __init__(self, message, residue):
        super().__init__(message)
        self.residue = residue


class StepUnderflowError(RuntimeError):
    """Backtracking line search shrank the step below its floor."""

    def __init__(self, message, step, shrink_count):
        super().__init__(message)
        self.step = step
        self.shrink_count = shrink_count


class DivergenceError(RuntimeError):
    """An iterative solver produced a non-finite objective value."""


class TruncationWarning(UserWarning):
    """State-space truncation leaked more probability mass than allowed.

    ``sink_mass`` holds the mass absorbed by the truncation boundary.
    """

    def __init__(self, message, sink_mass):
        super().__init__(message)
        self.sink_mass = sink_mass
