"""Exception hierarchy.

Invalid inputs raise :class:`ValueError` (or a subclass).  Failures of a
numerical procedure on otherwise valid input derive from
:class:`NumericalFailure`.
"""


class NumericalFailure(RuntimeError):
    """A numerical procedure could not produce a trustworthy result."""


class Singular(NumericalFailure):
    """L1 or L3 is too close to zero for an Eulerian quantity to exist."""


class WindowSingular(Singular):
    """A time window fails the singularity pre-scan."""


class StepUnderflow(NumericalFailure):
    """The adaptive step controller drove the step size below its floor."""


class NoConvergence(NumericalFailure):
    """An iterative solver ran out of iterations."""


class DegenerateJacobian(NumericalFailure):
    """The Newton Jacobian is (numerically) singular."""
