"""Exception types shared by the pipeline stages.

The CLI maps each class to a fixed exit code (see ``sge.cli``).
"""


class SGEError(Exception):
    """Base class for all library errors."""


class ValidationError(SGEError, ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    """Malformed line in an input file."""

    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")
