"""Exception types shared by every module."""


class CspbError(Exception):
    """Base class for errors raised by this package."""


class InputError(CspbError, ValueError):
    """Malformed or mismatched input (vocabulary, arity, domain, precondition)."""


class ResourceError(CspbError, RuntimeError):
    """A configured search or size budget was exceeded."""


class ParseError(InputError):
    """Syntax error in a text format, with a 1-based position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)
