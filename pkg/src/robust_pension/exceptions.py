"""Exception types raised by the pension model."""


class PensionModelError(ValueError):
    """Base class for every model error."""


class InvalidParameterError(PensionModelError):
    """A parameter lies outside its admissible range."""


class DomainError(PensionModelError):
    """A function was evaluated outside its domain (e.g. age below entry age)."""


class SingularityError(PensionModelError):
    """A closed form divides by a (near) zero quantity such as ``2k - 1``."""


class DegenerateError(PensionModelError):
    """A ratio is undefined because its denominator vanishes."""


class QuadratureError(PensionModelError):
    """Quadrature refinement failed to converge."""


class StepFailure(PensionModelError):
    """Backward ODE integration blew up before reaching the requested time."""

    def __init__(self, message, blowup_time=None):
        super().__init__(message)
        self.blowup_time = blowup_time


class ConstraintViolation(PensionModelError):
    """One or more scenario constraints failed; ``violations`` lists all of them."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class AllPathsInvalidError(PensionModelError):
    """Every simulated path hit the overflow guard."""


class ScenarioParseError(PensionModelError):
    """A scenario file could not be read or parsed."""
