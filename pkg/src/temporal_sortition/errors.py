"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: input errors exit 2, configuration
(divisibility) errors exit 3.
"""


class SortitionError(Exception):
    """Base class for every error raised by this package."""


class InputError(SortitionError, ValueError):
    """Malformed or out-of-range input (unknown id, negative radius, bad file)."""


class ConfigurationError(SortitionError):
    """Parameters are individually valid but cannot be combined."""


class DivisibilityError(ConfigurationError):
    """Strict mode requires an exact integer group size."""


class StructuralError(SortitionError):
    """A group hierarchy is malformed (dangling or overlapping children)."""


class InvariantViolation(SortitionError, AssertionError):
    """A guarantee the algorithms are supposed to establish did not hold."""
