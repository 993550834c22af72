"""Exception hierarchy and process exit codes.

Every failure surfaced to a caller goes through one of these classes so the
command line can map it to a stable exit code:

    0  success
    1  malformed input
    2  a dimension hypothesis failed
    3  the construction could not be carried out
    4  a certificate failed re-verification
"""

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_HYPOTHESIS = 2
EXIT_CONSTRUCTION = 3
EXIT_VERIFICATION = 4


class MengerError(Exception):
    """Base class for every error raised on purpose by this package."""

    exit_code = EXIT_CONSTRUCTION


class InputError(MengerError):
    """Malformed or inconsistent input: bad JSON, bad indices, bad parameters."""

    exit_code = EXIT_INPUT


class GroupCapError(InputError):
    """Group closure exceeded the configured element cap.

    The fix is to pass a finite subset of elements explicitly instead of
    asking for the full closure.
    """


class HypothesisError(MengerError):
    """A dimension inequality required by the construction does not hold."""

    exit_code = EXIT_HYPOTHESIS

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConstructionError(MengerError):
    exit_code = EXIT_CONSTRUCTION


class CoverInfeasibleError(ConstructionError):
    """The requested cover parameters cannot be met by the chosen backend."""


class BudgetError(ConstructionError):
    """A perturbation value could not be placed inside its window."""


class VerificationError(MengerError):
    """A certificate (or an exhaustive post-check) failed re-verification."""

    exit_code = EXIT_VERIFICATION


class InternalCheckError(MengerError):
    """An exhaustive self-check failed.

    This signals a bug in the construction, not a user error; the message
    carries the counterexample that tripped the check.
    """
