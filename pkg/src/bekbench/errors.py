"""Exception hierarchy.

Every failure mode that callers are expected to branch on gets its own type;
the CLI maps the broad families onto exit codes (parse problems, validation
problems, violated run-time invariants).
"""


class BekbenchError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(BekbenchError):
    """Array shapes are inconsistent with the requested operation."""


class NonHermitian(BekbenchError):
    """Input fails the Hermiticity precondition beyond tolerance."""


class NoConvergence(BekbenchError):
    """Iterative kernel exhausted its sweep budget."""


class NegativeSpectrum(BekbenchError):
    """A positive semidefinite input was required but an eigenvalue is negative."""


class SingularWithoutSupport(BekbenchError):
    """Function of a singular matrix requested without on_support=True."""


class NotASubalgebra(BekbenchError):
    """Claimed inclusion fails (an element does not belong to the larger span)."""


class NotConnected(BekbenchError):
    """Inclusion graph is disconnected; Perron weights are not unique."""


class NotCyclicSeparating(BekbenchError):
    """Vector is not cyclic and separating for the algebra at hand."""


class NotFaithful(BekbenchError):
    """State (or channel) fails the required faithfulness check."""


class NotAChannel(BekbenchError):
    """Map is not completely positive / unital / into the claimed range."""


class PathsDisagree(BekbenchError):
    """Two independently computed representations differ beyond tolerance."""


class NotFull(BekbenchError):
    """State is not full for the channel (cyclicity or left-inverse fails)."""


class CommutantMismatch(BekbenchError):
    """Functional supplied for the commutant side does not live on the commutant."""


class SupportViolation(BekbenchError):
    """Support condition fails where a finite answer was required."""


class OutsideRegion(BekbenchError):
    """Point does not belong to the causal region."""


class StepTooLarge(BekbenchError):
    """Integrator step size fails the drift tolerance."""


class SignatureViolation(BekbenchError):
    """Flow velocity is spacelike where a timelike vector was required."""


class UnsupportedRegion(BekbenchError):
    """Operation is not defined for this region kind."""


class BudgetZero(BekbenchError):
    """Optimizer invoked with an empty search budget."""


class InvariantViolation(BekbenchError):
    """A run-time invariant of a report failed its tolerance."""


class ScenarioError(BekbenchError):
    """Scenario file is syntactically or semantically malformed."""
