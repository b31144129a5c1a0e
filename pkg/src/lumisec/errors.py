"""Exception types raised across the package."""


class LumisecError(Exception):
    """Base class for all package errors."""


class MalformedConfig(LumisecError, ValueError):
    pass


class GeometryError(LumisecError, ValueError):
    pass


class GridDoesNotFit(GeometryError):
    pass


class DomainError(LumisecError, ValueError):
    pass


class DegenerateGeometry(LumisecError, ValueError):
    pass


class NumericalError(LumisecError, ArithmeticError):
    """Base for failures of the numerical machinery (CLI exit code 2)."""


class IntegrationNotConverged(NumericalError):
    pass


class NonFiniteLoss(NumericalError):
    pass


class EmptyEveSet(LumisecError, ValueError):
    pass


class SearchSpaceTooLarge(LumisecError, ValueError):
    pass
