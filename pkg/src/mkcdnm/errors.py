"""Exception hierarchy shared across the package.

Each family maps onto one CLI exit code (see :mod:`mkcdnm.cli`).
"""


class MKCError(Exception):
    """Base class for all errors raised by mkcdnm."""

    exit_code = 1


class InputError(MKCError, ValueError):
    exit_code = 2


class FormatError(InputError):
    """Malformed kernel or labels file."""


class DegenerateSampleError(InputError):
    """A sample coincides with the dataset mean in feature space."""


class NumericError(MKCError, ArithmeticError):
    exit_code = 3


class RankError(NumericError):
    """Requested dimension exceeds the numerical rank of a matrix."""

    def __init__(self, message, max_feasible=None):
        super().__init__(message)
        self.max_feasible = max_feasible


class NonConvergenceError(NumericError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InfeasibleError(MKCError):
    """The alignment constraints cannot be met inside the admissible range."""

    exit_code = 4

    def __init__(self, message, view=None, partner=None):
        super().__init__(message)
        self.view = view
        self.partner = partner
