"""Exception and warning types shared across the package."""


class SelfSimError(Exception):
    """Base class for all package errors."""


class DomainError(SelfSimError):
    """A state lies outside the flux model's domain box."""


class HyperbolicityError(SelfSimError):
    """Characteristic speeds are complex or not separated."""


class EmptyIntervalError(SelfSimError):
    pass


class NotContinuousError(SelfSimError):
    def __init__(self, message, xi=None):
        super().__init__(message)
        self.xi = xi


class NotSingletonError(SelfSimError):
    pass


class NotMonotoneError(SelfSimError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class CoverageError(SelfSimError):
    """A rarefaction curve left the domain before covering the speed interval."""


class ResonanceError(SelfSimError):
    def __init__(self, message, xi=None):
        super().__init__(message)
        self.xi = xi


class BreakpointError(SelfSimError):
    pass


class PrerequisiteError(SelfSimError):
    pass


class PreconditionError(SelfSimError):
    pass


class SingularViscosityError(SelfSimError):
    pass


class DomainExit(SelfSimError):
    """Raised when an integration cannot proceed inside the domain box."""


class SchemaError(SelfSimError):
    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class ConvergenceWarning(UserWarning):
    pass
