"""Exception types shared by the library and mapped to CLI exit codes."""


class DeltaBoseError(Exception):
    exit_code = 1


class InvalidArgument(DeltaBoseError, ValueError):
    exit_code = 2


class NumericalFailure(DeltaBoseError, ArithmeticError):
    """A computation produced a non-finite value or missed its error target.

    ``where`` carries whatever locates the failure (node coordinates, grid
    sizes), so callers can report it.
    """

    exit_code = 1

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class ResourceLimit(DeltaBoseError):
    exit_code = 3
