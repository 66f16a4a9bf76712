"""Exception hierarchy shared by all modules.

``PreconditionError`` marks invalid input (bad parameters, out-of-domain
requests).  ``NumericalFailure`` marks a computation that was attempted but
did not produce a trustworthy result.  The command line maps the first to
exit status 1 and the second to exit status 2.
"""


class PreconditionError(ValueError):
    """Input violates a documented precondition."""


class DomainError(PreconditionError):
    """Requested evaluation lies outside the convergence domain."""


class PoleError(PreconditionError, ZeroDivisionError):
    """Evaluation hits a pole of the function."""


class NumericalFailure(RuntimeError):
    """A numerical procedure failed to converge or blew up."""


class ResonanceError(NumericalFailure):
    """A recursion denominator vanished with a non-vanishing numerator."""
