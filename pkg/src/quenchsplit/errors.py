"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    pass


class UnsupportedSize(ValueError):
    pass


class IntegrationFailure(RuntimeError):
    pass


class NonConvergence(RuntimeError):
    """Inner coupled (U, tau) iteration did not settle within its budget."""


class SingularityContact(RuntimeError):
    """An inner iterate touched u = 1; treated as numerical quenching."""


class StructureViolation(RuntimeError):
    """A positivity / monotonicity / bound monitor failed beyond rounding slack.

    ``step`` is the offending step index and ``trajectory`` the partial run
    up to (and including) the offending state, when available.
    """

    def __init__(self, message, step=None, trajectory=None):
        super().__init__(message)
        self.step = step
        self.trajectory = trajectory


class InvalidBracket(ValueError):
    pass


class Inconclusive(RuntimeError):
    def __init__(self, message, a=None):
        super().__init__(message)
        self.a = a
