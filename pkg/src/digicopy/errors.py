"""Exception hierarchy shared by every digicopy module."""


class DigicopyError(Exception):
    """Base class for all library errors."""


class PanelParseError(DigicopyError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PanelValidationError(DigicopyError, ValueError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f'column "{column}"')
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class WindowRangeError(DigicopyError, IndexError):
    pass


class PanelTooShortError(DigicopyError, ValueError):
    pass


class CapacityError(DigicopyError, ValueError):
    pass


class ModelError(DigicopyError, ValueError):
    pass


class InstanceTooLargeError(DigicopyError, ValueError):
    pass


class InfeasibleError(DigicopyError):
    """No assignment satisfies the budget.

    ``unconstrained_min`` is the objective the optimizer would reach without
    the budget and ``plan`` the corresponding model.
    """

    def __init__(self, unconstrained_min: float, budget: float, plan=None):
        self.unconstrained_min = unconstrained_min
        self.budget = budget
        self.plan = plan
        super().__init__(
            f"infeasible: minimum cost {unconstrained_min!r} exceeds budget {budget!r}"
        )


class AxisMismatchError(DigicopyError, ValueError):
    def __init__(self, message: str, index: int | None = None):
        self.index = index
        super().__init__(message)
