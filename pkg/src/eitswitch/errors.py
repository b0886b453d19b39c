"""Exception taxonomy shared across the package."""


class EitSwitchError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(EitSwitchError, ValueError):
    """A physical parameter is out of range or not finite."""


class DegenerateSteadyStateError(EitSwitchError):
    """The Liouvillian null space has dimension above one.

    Typically means the drive topology leaves two or more states mutually
    disconnected (for example, all fields off leaves both ground states dark),
    so no unique steady state exists.
    """


class SolveFailureError(EitSwitchError):
    """A linear solve produced no usable solution (singular or ill-conditioned
    system, or a solution violating density-matrix invariants)."""


class FixedPointDivergedError(EitSwitchError):
    """The damped intensity fixed point failed to converge.

    Carries the last two iterates for post-mortem inspection.
    """

    def __init__(self, message, last_iterates=None):
        super().__init__(message)
        self.last_iterates = last_iterates


class ModelViolationError(EitSwitchError):
    """The model produced a quantity outside its domain of validity,
    for example a negative averaged absorption coefficient (gain)."""


class ConfigError(EitSwitchError):
    """A configuration file or line-data file is malformed or inconsistent."""


class SweepError(EitSwitchError):
    """A detuning sweep aborted at some point.

    The ``partial`` attribute holds the spectrum accumulated before the
    failure; ``delta`` is the detuning at which the failure occurred.
    """

    def __init__(self, message, delta=None, partial=None):
        super().__init__(message)
        self.delta = delta
        self.partial = partial
