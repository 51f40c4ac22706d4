"""Exception types shared across the package.

Validation problems (bad user input, malformed files) derive from
``ValidationError`` so the CLI can map them to exit code 2.
"""


class SwipeError(Exception):
    pass


class ValidationError(SwipeError, ValueError):
    pass


class InvalidArgument(ValidationError):
    pass


class UnknownCharacter(ValidationError):
    pass


class InvalidWord(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleTarget(SwipeError):
    pass


class NoFeasibleWord(SwipeError):
    pass


class TooLarge(SwipeError):
    pass
