"""
Exception hierarchy shared by the library and the command line.

Every error carries the process exit code the CLI reports for it.
"""


class LabError(Exception):
    """Base class for all lerw-lab errors."""

    exit_code = 1


class PreconditionViolation(LabError):
    """The caller asked for something the operation is not defined for."""

    exit_code = 3


class InternalDefect(LabError):
    """Something that should never happen did; results would be biased."""

    exit_code = 4


class DomainTooFine(PreconditionViolation):
    """No closed face around the origin avoids the domain boundary."""


class SingularAtOrigin(PreconditionViolation):
    """A Green's function or observable was evaluated at z = 0."""


class SupportMismatch(PreconditionViolation):
    """A measure places mass away from the curve class it is paired with."""


class InsufficientHits(PreconditionViolation):
    """Too few samples hit the target ball for a conditional estimate."""


class PrefixTooRare(PreconditionViolation):
    """The conditioning prefix of a domain Markov test is too rare."""


class DegenerateFit(PreconditionViolation):
    """A regression was requested on too few distinct abscissae."""


class StepTooLarge(PreconditionViolation):
    """The adaptive Loewner controller cannot meet its local error target."""


class BallOutsideDisk(PreconditionViolation):
    """The requested ball is not contained in the unit disk."""


class StepCapExceeded(InternalDefect):
    """A random walk ran past the hard step cap without exiting."""


class UsageError(LabError):
    """Unknown, missing or malformed command-line flags."""

    exit_code = 2
