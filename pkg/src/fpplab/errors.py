"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: usage errors exit 1,
numeric failures exit 2, infeasible requests exit 3.
"""


class FpplabError(Exception):
    """Base class for all package errors."""


class InvalidLawError(FpplabError):
    """A degree or offspring law violates its invariants."""


class LawFormatError(FpplabError):
    """A law descriptor file could not be parsed.

    Carries the offending line number when one is known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidArgumentError(FpplabError):
    """An operation was called outside its stated preconditions."""


class NumericError(FpplabError):
    """An iterative solver failed to converge; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(message)


class SupercriticalityError(FpplabError):
    """The law is not supercritical (nu <= 1); limits are undefined.

    ``partial`` holds whatever constants are still well defined.
    """

    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)


class RejectionFailureError(FpplabError):
    """Rejection sampling exhausted its attempt budget."""

    def __init__(self, message, attempts=0, acceptance_estimate=0.0):
        self.attempts = attempts
        self.acceptance_estimate = acceptance_estimate
        super().__init__(message)


class InfeasibleRequestError(FpplabError):
    """The request would need more work than the stated budget allows.

    ``required`` carries an estimate of what the request would need
    (e.g. the number of Monte Carlo runs).
    """

    def __init__(self, message, required=None):
        self.required = required
        super().__init__(message)
