"""Exception hierarchy shared by all modules."""


class HPIError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(HPIError, ValueError):
    """An argument is out of its admissible range."""


class ValidationError(HPIError, ValueError):
    """Structural mismatch between objects (dimensions, spaces, game kinds)."""


class FormatError(HPIError, ValueError):
    """A file could not be parsed."""


class MissingConfigurationError(HPIError, KeyError):
    """A tabular oracle was queried for a configuration it does not store."""

    def __init__(self, configuration):
        self.configuration = tuple(configuration)
        super().__init__(f"no stored performance for configuration {list(self.configuration)!r}")

    def __str__(self):
        return self.args[0]


class OracleError(HPIError, RuntimeError):
    """An oracle failed or returned a non-finite value while playing a game.

    ``coalition`` holds the mask of the coalition being evaluated, when known.
    """

    def __init__(self, message, coalition=None):
        self.coalition = coalition
        if coalition is not None:
            message = f"{message} (coalition mask {coalition})"
        super().__init__(message)


class SolverError(HPIError, ArithmeticError):
    """A least-squares system was numerically singular."""

    def __init__(self, message, condition=None):
        self.condition = condition
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)
