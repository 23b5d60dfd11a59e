"""Exception types shared across the package."""


class InfeasibleParametersError(ValueError):
    """The requested privacy budget cannot be met by any valid mechanism
    configuration (e.g. the blanket probability formula exceeds 1)."""


class MalformedMessageError(ValueError):
    """A submitted message violates the protocol's wire format."""


class InsufficientTrialsError(RuntimeError):
    """A Monte-Carlo estimate is too noisy to support a verdict."""
