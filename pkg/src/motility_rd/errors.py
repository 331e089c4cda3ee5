"""Exception hierarchy shared by all modules."""


class MotilityRDError(Exception):
    """Base class for every error raised by this package."""


class NegativeInput(MotilityRDError, ValueError):
    pass


class NonPositiveMotility(MotilityRDError, ValueError):
    pass


class InvalidRange(MotilityRDError, ValueError):
    pass


class InvalidInput(MotilityRDError, ValueError):
    pass


class GridMismatch(MotilityRDError, ValueError):
    pass


class WrongFamily(MotilityRDError, TypeError):
    pass


class SolverError(MotilityRDError, RuntimeError):
    """Failure inside a time step; carries the step index and time when known."""

    def __init__(self, message, step=None, t=None):
        super().__init__(message)
        self.step = step
        self.t = t

    def __str__(self):
        base = super().__str__()
        if self.step is None:
            return base
        return f"{base} (step {self.step}, t={self.t:.6g})"


class NegativityBreach(SolverError):
    pass


class NonFinite(SolverError):
    pass


class SingularSystem(SolverError):
    pass


class HypothesisViolation(MotilityRDError):
    pass


class ParseError(MotilityRDError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ValidationError(MotilityRDError, ValueError):
    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
