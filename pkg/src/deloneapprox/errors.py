"""Exception hierarchy shared by every module."""


class DeloneApproxError(Exception):
    """Base class for all errors raised by the package."""


class ConfigError(DeloneApproxError):
    """Malformed or inconsistent experiment configuration."""


class InvalidIntervalError(DeloneApproxError, ValueError):
    pass


class InvalidPairError(DeloneApproxError, ValueError):
    pass


class BudgetExceededError(DeloneApproxError):
    """A window enumeration would exceed the configured point budget."""

    def __init__(self, required: int, budget: int, what: str = "window enumeration"):
        self.required = required
        self.budget = budget
        super().__init__(
            f"{what} needs {required} points but the point budget is {budget}; "
            f"rerun with --point-budget {required} or larger"
        )


class PrecisionError(DeloneApproxError):
    """A big-float computation would exceed its precision budget."""


class InsufficientWindowError(DeloneApproxError):
    pass


class DegeneratePsiError(DeloneApproxError):
    pass


class UndefinedRatioError(DeloneApproxError):
    pass
