"""Exception types raised by lincs."""


class RejectedInputError(ValueError):
    """An argument violates an operation's precondition."""


class NumericalError(ArithmeticError):
    """A numerical routine did not reach the required accuracy."""

    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3g})")
        self.residual = residual


class ConfigError(ValueError):
    """Invalid run configuration; ``line`` points into the source file when known."""

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line
        self.message = message
