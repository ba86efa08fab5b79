"""Exception hierarchy shared by all refpat modules."""


class RefPatError(Exception):
    """Base class for every error raised by refpat."""


class ContractError(RefPatError, ValueError):
    """A precondition of an operation was violated by the caller."""


class StructuralError(RefPatError):
    """A mesh or pattern is internally inconsistent."""


class ParseError(RefPatError, ValueError):
    """Malformed pattern or mesh text.

    Parameters
    ----------
    message : str
        What went wrong.
    line : int, optional
        1-based line number in the source text, if known.
    source : str, optional
        File name, if the text came from a file.
    """

    def __init__(self, message, line=None, source=None):
        self.message = message
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class PatternError(RefPatError):
    """A refinement pattern does not describe a valid partition."""


class NameCollisionError(RefPatError):
    """Two different patterns were registered under the same name."""


class IncompatiblePatternError(RefPatError):
    """A pattern cannot be applied without breaking conformity.

    Attributes
    ----------
    compatible : list
        Patterns from the database that would have been accepted.
    """

    def __init__(self, message, compatible=()):
        super().__init__(message)
        self.compatible = list(compatible)


class ConflictError(RefPatError):
    """Refined neighbours impose different side patterns on the same side."""
