"""Exception hierarchy shared by every cgthreat module."""


class CGThreatError(Exception):
    """Base class; the CLI maps any of these to exit status 1."""


class ParseError(CGThreatError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(f"{where}{message}")


class UnsupportedFormatError(ParseError):
    pass


class ParameterError(CGThreatError, ValueError):
    pass


class CapacityError(CGThreatError):
    pass


class ConsistencyError(CGThreatError):
    pass


class UndefinedScoreError(CGThreatError):
    """Raised when a quality score (silhouette, modularity) has no defined value."""
