"""Exception types raised by the library."""


class RieszVarError(Exception):
    """Base class for all library errors."""


class OutOfDomain(RieszVarError, ValueError):
    pass


class Unsupported(RieszVarError, ValueError):
    pass


class NoModulus(RieszVarError, ValueError):
    """Raised when an analytic profile cannot certify an interval range."""


class PreconditionViolated(RieszVarError, ValueError):
    pass


class GridMismatch(RieszVarError, ValueError):
    pass


class NonFiniteEnergy(RieszVarError, ArithmeticError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SpecError(RieszVarError, ValueError):
    """Malformed JSON/CSV input; ``where`` names the offending field or line."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
