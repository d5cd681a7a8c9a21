"""Exception types shared across the package."""


class MixbalError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(MixbalError, ValueError):
    """A configuration value is outside its documented range."""


class InsufficientSamplesError(MixbalError):
    """A class does not hold enough samples for the requested operation."""

    def __init__(self, class_id: int, needed: int, available: int):
        self.class_id = class_id
        self.needed = needed
        self.available = available
        super().__init__(
            f"class {class_id} has {available} samples, {needed} required"
        )


class ParseError(MixbalError, ValueError):
    """A file could not be parsed; carries the offending row number."""

    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")


class ShapeMismatchError(MixbalError, ValueError):
    """Array shapes do not chain together."""


class MissingIndexError(MixbalError):
    """A neighbor index is required but was not supplied."""


class EmptyClassError(MixbalError):
    """A per-class statistic was requested for a class with no examples."""


class DegenerateSplitError(MixbalError):
    """The majority/minority split has an empty side."""


class ConstantInputError(MixbalError, ValueError):
    """A rank correlation was requested for a constant sequence."""


class UnknownMethodError(MixbalError, ValueError):
    """A method name is not in the catalog; lists the valid names."""


class DivergenceError(MixbalError):
    """Training produced a non-finite loss."""
