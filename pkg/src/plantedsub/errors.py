"""Exception types shared across the package.

The CLI maps these onto exit codes: validation errors exit 2, guard
errors exit 3.
"""


class PlantedSubError(Exception):
    """Base class for all package errors."""


class ValidationError(PlantedSubError):
    """An input violates an operation's contract."""


class GuardExceeded(PlantedSubError):
    """An exact-enumeration guard was exceeded; the instance is too large."""


class DegenerateNullVariance(ValidationError):
    """The statistic has zero variance under the null; advantage is undefined."""
