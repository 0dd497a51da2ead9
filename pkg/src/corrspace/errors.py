"""Exception types shared across the package."""


class CorrspaceError(Exception):
    """Base class for all errors raised by corrspace."""


class DimensionError(CorrspaceError):
    """Shapes or lengths of inputs do not agree."""


class ParseError(CorrspaceError):
    """A resource file is malformed. Carries the path and 1-based line number."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class DegenerateRowError(CorrspaceError):
    """A row with near-zero norm was fed to a cosine-based loss."""

    def __init__(self, side, row):
        self.side = side
        self.row = row
        super().__init__(f"row {row} of {side} has norm below 1e-12")


class EmptyDictionaryError(CorrspaceError):
    """A bilingual dictionary resolved to zero usable pairs."""


class NonFiniteError(CorrspaceError):
    """A NaN or Inf surfaced where only finite values are allowed."""


class VocabularyError(CorrspaceError):
    """A word or character is missing from the vocabulary or inventory."""
