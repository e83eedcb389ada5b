"""Exception hierarchy shared by the numerical modules."""


class DomainError(ValueError):
    """Arguments outside the region where a quantity is defined."""


class NumericError(ArithmeticError):
    """A computation failed to reach its accuracy target."""


class ConditioningError(NumericError):
    """A linear system is numerically singular."""


class BranchError(NumericError):
    """A square root or quadratic branch could not be continued."""


class IntegrationError(NumericError):
    """ODE integration failed or drifted off its invariants."""

    def __init__(self, message: str, location: float | None = None):
        super().__init__(message if location is None else f"{message} (at {location:.6g})")
        self.location = location
