"""Exception hierarchy shared by the oqrw modules."""


class OqrwError(Exception):
    """Base class for every error raised by oqrw."""


class NotHermitian(OqrwError, ValueError):
    pass


class NotPsd(OqrwError, ValueError):
    pass


class DimensionMismatch(OqrwError, ValueError):
    pass


class MissingOperator(OqrwError, KeyError):
    pass


class NotStochastic(OqrwError, ValueError):
    pass


class NotNormalized(OqrwError, ValueError):
    pass


class BoundaryViolation(OqrwError, RuntimeError):
    """The support of a state reached the edge of a truncated lattice window."""


class TraceError(OqrwError, RuntimeError):
    """Trace preservation failed beyond tolerance during evolution."""


class InvalidState(OqrwError, ValueError):
    pass


class IndexOutOfRange(OqrwError, IndexError):
    pass


class ParseError(OqrwError):
    """A document could not be parsed; ``location`` is ``(line, column)`` when known."""

    def __init__(self, message, location=None):
        if location is not None:
            message = f"{message} (line {location[0]}, column {location[1]})"
        super().__init__(message)
        self.location = location


class SchemaError(OqrwError):
    def __init__(self, message, missing=()):
        self.missing = tuple(missing)
        if self.missing:
            message = f"{message}: missing {', '.join(self.missing)}"
        super().__init__(message)


class CriterionDisagreement(OqrwError, RuntimeError):
    """Two reducibility criteria that must agree returned conflicting answers."""
