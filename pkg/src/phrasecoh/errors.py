"""Exception hierarchy.

``InputError`` subclasses map to CLI exit code 2, ``InvariantError`` to 3.
"""


class PhrasecohError(Exception):
    pass


class InputError(PhrasecohError, ValueError):
    """Bad user-supplied data: malformed files, invalid documents."""


class CorpusParseError(InputError):
    def __init__(self, message: str, line: int, offset: int):
        super().__init__(f"line {line}, column {offset}: {message}")
        self.line = line
        self.offset = offset


class CorpusValidationError(InputError):
    def __init__(self, document_id: str, field: str, message: str):
        where = f"{field}: " if field else ""
        super().__init__(f"document {document_id!r}: {where}{message}")
        self.document_id = document_id
        self.field = field


class UnsupportedInputError(InputError):
    pass


class EmbeddingFormatError(InputError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class UndefinedMetricError(InputError):
    pass


class ModelFormatError(InputError):
    pass


class FeatureFileError(InputError):
    pass


class InvariantError(PhrasecohError, AssertionError):
    """An internal consistency check failed."""
