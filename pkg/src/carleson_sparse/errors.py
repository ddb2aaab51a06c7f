"""Exception types shared across the package."""


class CarlesonError(Exception):
    """Base class for all package errors."""


class DomainError(CarlesonError, ValueError):
    """A cube, region or field does not belong to the grid it is used with."""


class InputError(CarlesonError, ValueError):
    """Malformed user input (non-finite samples, bad specs, bad parameters)."""


class BudgetError(CarlesonError, RuntimeError):
    """A requested computation exceeds the configured resource budget."""


class CalibrationError(CarlesonError, RuntimeError):
    """The threshold constant of the sparse builder could not be calibrated."""
