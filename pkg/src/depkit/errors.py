"""Exception types shared across the package."""


class DepkitError(Exception):
    """Base class for all depkit errors."""


class ConlluParseError(DepkitError):
    """Malformed CoNLL-U input. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TreeValidationError(DepkitError):
    """A head assignment or tree-valued argument violates its invariants."""


class AlignmentError(DepkitError):
    """Gold and predicted corpora do not line up token for token."""


class ModelFormatError(DepkitError):
    """A model file is not readable: bad magic, bad version, or truncated."""


class MeterError(DepkitError):
    """Energy meter misconfiguration (unknown source, no counters)."""
