"""Exception hierarchy shared by every module of the lab."""


class SecampError(Exception):
    """Base class for all errors raised by secamp."""


class SpecMismatchError(SecampError, ValueError):
    """Operands live in different fields."""


class DimensionError(SecampError, ValueError):
    """Vector or matrix shapes do not line up."""


class FieldDivisionByZero(SecampError, ZeroDivisionError):
    pass


class InvalidRateError(SecampError, ValueError):
    """A rate maps to a zero-width (or otherwise unusable) code dimension."""


class CapacityError(SecampError, RuntimeError):
    """An enumeration would exceed its configured cap."""


class ConfigError(SecampError, ValueError):
    """Experiment configuration failed to parse or validate."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class ContractViolation(SecampError, AssertionError):
    """A checked inequality or identity did not hold."""
