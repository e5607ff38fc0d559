"""Exception types raised by the toolkit."""


class QSLError(Exception):
    """Base class for all toolkit errors."""


class DegenerateHamiltonianError(QSLError, ValueError):
    pass


class ConsistencyError(QSLError, ArithmeticError):
    """Two routes to the same quantity disagree beyond roundoff."""


class UnreachableTargetError(QSLError, RuntimeError):
    """The duration solver could not hit the target state."""


class InsufficientActionError(QSLError, ValueError):
    """The trajectory never covers the requested state-space distance."""

    def __init__(self, deficit: float):
        self.deficit = deficit
        super().__init__(
            f"trajectory action falls short of the target distance by {deficit:.3e}"
        )
