"""Exception hierarchy shared by every ffrand module."""


class FfrandError(Exception):
    """Base class for all library errors."""


class FieldMismatchError(FfrandError, ValueError):
    """Operands live in different finite fields."""


class MeasureError(FfrandError, ValueError):
    """Invalid probability weights."""


class BudgetExceededError(FfrandError, RuntimeError):
    """An exhaustive enumeration would exceed its configured budget."""

    def __init__(self, budget_name: str, required, limit):
        self.budget_name = budget_name
        self.required = required
        self.limit = limit
        super().__init__(f"{budget_name} budget exceeded: need {required}, limit {limit}")


class DegenerateError(FfrandError, ValueError):
    """A quantity is undefined because its input is degenerate (e.g. zero probability)."""
