"""Exception hierarchy shared across the package."""


class SCVError(Exception):
    """Base class for all package errors."""


class ValidationError(SCVError):
    """Input failed validation; the CLI maps these to exit code 2."""


class SchemaError(ValidationError):
    pass


class CycleError(ValidationError):
    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class DanglingEdgeError(ValidationError):
    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class DomainError(ValidationError):
    """A numeric parameter is outside its allowed range."""


class DegenerateSampleError(SCVError):
    """A pairwise or entropy statistic is undefined for this sample size."""


class EmptySampleError(SCVError):
    pass


class ProviderError(SCVError):
    pass


class SizeCapError(SCVError):
    pass


class ParseError(SCVError):
    def __init__(self, message, position=0, expected=()):
        self.position = position
        self.expected = tuple(expected)
        detail = f" at offset {position}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(message + detail)


class EvaluationError(SCVError):
    pass


class BackendError(SCVError):
    def __init__(self, message, round_index=None, sample_index=None):
        super().__init__(message)
        self.round_index = round_index
        self.sample_index = sample_index


class IrreparableError(SCVError):
    pass


class BoundInvalidError(SCVError):
    pass


class DegenerateError(SCVError):
    pass


class MissingInputError(SCVError):
    pass
