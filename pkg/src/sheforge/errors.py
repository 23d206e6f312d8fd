"""Exception types raised across the package."""


class SheforgeError(Exception):
    """Base class; the CLI maps these to exit code 1."""

    kind = "error"


class DomainError(SheforgeError, ValueError):
    kind = "domain"


class InfeasibleError(DomainError):
    kind = "infeasible"


class DegenerateFundamentalError(DomainError):
    kind = "degenerate_fundamental"


class ExtrapolationError(DomainError):
    kind = "extrapolation"


class FormatError(SheforgeError, ValueError):
    kind = "format"


class NumericalError(SheforgeError, ArithmeticError):
    kind = "numerical"
