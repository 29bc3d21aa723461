class InvalidInputError(ValueError):
    """Raised when arguments violate an operation's preconditions."""


class CapacityError(RuntimeError):
    """Raised when an enumeration budget or retry cap is exceeded."""
