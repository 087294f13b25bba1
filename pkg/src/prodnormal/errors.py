"""Exception types shared across the package."""


class ProdNormalError(Exception):
    """Base class for all numerical and validation errors raised here."""


class DomainError(ProdNormalError, ValueError):
    """Argument outside the mathematical domain of the operation."""


class PoleError(DomainError):
    """Evaluation requested exactly at a pole (e.g. gamma at -2)."""


class PreconditionError(DomainError):
    """A documented precondition of the operation does not hold."""


class ConvergenceError(ProdNormalError, RuntimeError):
    """A series or quadrature failed to meet tolerance within its budget."""


class OverflowRangeError(ProdNormalError, OverflowError):
    """Unscaled value exceeds the representable double range."""
