class UsageError(ValueError):
    """A caller violated an operation's precondition."""


class ParseError(ValueError):
    """A scene or path document could not be read.

    ``line`` is 1-based, or None when the problem is not tied to a line.
    """

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class IntegrationError(ArithmeticError):
    """Forward integration produced a non-finite state."""
