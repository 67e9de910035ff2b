"""Exception hierarchy shared by all sidesynth modules."""


class SidesynthError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SidesynthError, ValueError):
    """A concrete string does not belong to its declared domain."""


class FormulaError(SidesynthError, ValueError):
    """A formula is malformed or inconsistent with the string domain."""


class ParseError(SidesynthError, ValueError):
    """Syntax error in constraint or program text, with a source position."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ProjectionError(SidesynthError):
    """C_h cannot be projected onto the low input (differing lengths)."""


class DSLError(SidesynthError, ValueError):
    """A program violates the static rules of the DSL."""


class SymexecError(SidesynthError):
    """A branch condition cannot be expressed in the constraint language."""


class ContradictionError(SidesynthError):
    """Knowledge about the secret became empty.

    In noiseless simulation this means the observation oracle and the
    observation constraints disagree, i.e. a bug upstream.
    """


class PartitionError(SidesynthError):
    """Observation classes do not partition the current knowledge."""


class ExhaustedError(SidesynthError):
    """No candidate low input is left in C_l."""


class ConfigurationError(SidesynthError, ValueError):
    """Inconsistent run or heuristic configuration."""
