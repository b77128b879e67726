"""Exception types shared across the engine."""


class QcqcError(Exception):
    """Base class for all engine errors."""


# --- gallery / persistence ---

class GalleryError(QcqcError):
    pass


class DimensionMismatch(GalleryError):
    pass


class DuplicateId(GalleryError):
    pass


class NormError(GalleryError):
    """Embedding norm deviates too far from 1 to be silently renormalized."""


class ZeroVector(NormError):
    """Embedding norm is numerically zero."""


class MalformedLine(GalleryError):
    """Manifest line cannot be parsed; carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class FormatError(GalleryError):
    """Embedding file header or payload is invalid."""


class UnsupportedVersion(FormatError):
    pass


class MissingScore(GalleryError):
    """Record lacks a score required by the requested operation."""


# --- quantile ---

class QuantileError(QcqcError):
    pass


class EmptyVector(QuantileError):
    pass


class NonFiniteScore(QuantileError):
    pass


class NonMonotonePercentiles(QuantileError):
    pass


# --- completion ---

class CompleterError(QcqcError):
    pass


class EmptyPrefix(CompleterError):
    pass


class EmptyText(CompleterError):
    pass


class EmptyGallery(CompleterError):
    pass


class UnknownLevelLabel(CompleterError):
    pass


class LevelsNotAssigned(CompleterError):
    pass


class EndpointError(CompleterError):
    """Base class for external completion endpoint failures."""


class EndpointTimeout(EndpointError):
    pass


class HttpError(EndpointError):
    """Non-2xx (or unreachable) endpoint response; carries the HTTP status."""

    def __init__(self, status: int | None, message: str = ""):
        super().__init__(message or f"endpoint returned status {status}")
        self.status = status


class MalformedResponse(EndpointError):
    pass


# --- search ---

class EmbedderFailure(QcqcError):
    """Embedding a query failed; carries the failing query text."""

    def __init__(self, query: str, reason: str = ""):
        super().__init__(f"failed to embed {query!r}" + (f": {reason}" if reason else ""))
        self.query = query


# --- evaluation ---

class IncompleteGrid(QcqcError):
    pass


# --- rank analysis ---

class RanklabError(QcqcError):
    pass


class ZeroMatrix(RanklabError):
    pass


class NonFinite(RanklabError):
    pass


class BadIndexSet(RanklabError):
    pass
