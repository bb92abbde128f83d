"""Exception hierarchy.

Contract violations derive from :class:`ValueError`; numerical failures from
:class:`ArithmeticError`.
"""


class WGraphError(Exception):
    pass


class InputError(WGraphError, ValueError):
    """Input violates an operation's precondition."""


class DisconnectedGraphError(InputError):
    pass


class NotDiffusiveError(InputError):
    pass


class NumericalError(WGraphError, ArithmeticError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
