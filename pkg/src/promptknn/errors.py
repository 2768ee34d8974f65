"""Exception hierarchy.

Everything raised on purpose derives from :class:`PromptKnnError`, split into
validation failures (bad data or bad arguments, CLI exit code 2) and store
failures (unreadable or inconsistent files; I/O problems map to exit code 3).
"""

from __future__ import annotations


class PromptKnnError(Exception):
    """Base class for all library errors."""


class DimMismatchError(PromptKnnError):
    """Two vectors/matrices that must share a dimension do not."""


class ZeroVectorError(PromptKnnError):
    """A vector with zero L2 norm where a direction is required."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class EmptyMatrixError(PromptKnnError):
    """An operation that needs at least one row got none."""


class RowCountMismatchError(PromptKnnError):
    """Row-aligned inputs have different row counts."""


class NormalizationError(PromptKnnError):
    """Manifest claims pre-normalized rows but a row is not unit length."""


class MissingVocabularyError(PromptKnnError):
    """Vocabulary filtering requested without the required vocabulary inputs."""


class StoreError(PromptKnnError):
    """Base class for persistence-format errors."""


class IoFailureError(StoreError):
    """Underlying OS-level read/write failure."""


class BadMagicError(StoreError):
    """Embedding file does not start with the expected magic bytes."""


class BadDtypeError(StoreError):
    """Embedding file header declares an unsupported dtype code."""


class BadHeaderError(StoreError):
    """Header is structurally invalid (nonzero reserved bytes, zero dim)."""


class TruncatedFileError(StoreError):
    """File length disagrees with what the header promises."""


class NonFinitePayloadError(StoreError):
    """Embedding payload contains NaN or infinity."""


class AllocationCapExceededError(StoreError):
    """Header asks for a payload larger than the configured allocation cap."""


class CountMismatchError(StoreError):
    """Corpus files disagree on the number of rows/prompts."""


class ManifestError(StoreError):
    """Corpus manifest is unreadable or missing required fields."""


class MalformedJsonLineError(StoreError):
    """A prompts JSON-Lines record is invalid; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
