"""Exception hierarchy shared by every module."""


class PlantedGraphError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(PlantedGraphError, ValueError):
    pass


class InvalidProbabilityError(InvalidParameterError):
    """Edge probability lambda/n falls outside [0, 1]."""


class InvalidRegimeError(InvalidParameterError):
    """A formula was requested outside the parameter regime where it is defined."""


class DegenerateSpectrumError(InvalidParameterError):
    pass


class BudgetExceededError(PlantedGraphError, RuntimeError):
    """An exact computation would exceed its work budget; no partial result is returned."""

    def __init__(self, what, budget):
        super().__init__(f"{what}: work budget of {budget} steps exceeded")
        self.budget = budget


class ParseError(PlantedGraphError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
