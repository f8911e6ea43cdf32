"""Exception types raised across the package."""


class MatthewCFError(Exception):
    """Base class for package errors."""


class ParseError(MatthewCFError, ValueError):
    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class EmptyLogError(MatthewCFError, ValueError):
    pass


class InsufficientDataError(MatthewCFError, ValueError):
    pass


class DegenerateInputError(MatthewCFError, ValueError):
    pass


class ModeError(MatthewCFError, ValueError):
    pass
