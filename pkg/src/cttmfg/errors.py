"""Exception types shared across the package."""


class CTTError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(CTTError, ValueError):
    pass


class NumericInstabilityError(CTTError, ArithmeticError):
    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class DomainError(CTTError, ValueError):
    """A trajectory handed to an operator lies outside its admissible set."""


class BracketError(CTTError, ValueError):
    pass


class DegenerateScenarioError(CTTError, ValueError):
    pass


class ConfigError(CTTError, ValueError):
    """Configuration could not be parsed or validated.

    ``violations`` lists every problem found, not just the first.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
