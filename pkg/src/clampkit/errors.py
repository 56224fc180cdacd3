"""Exception types shared across the toolkit."""


class ValidationError(ValueError):
    """Raised when input data, files, or parameters violate a contract.

    The CLI maps this to exit code 2 and the HTTP service to status 400,
    so every loader and operation raises it with a single-line message.
    """


class DimensionMismatchError(ValidationError):
    """Raised when array shapes, model layers, or dataset/model pairs disagree."""
