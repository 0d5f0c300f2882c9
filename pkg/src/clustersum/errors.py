"""Exception types shared across the package.

Everything raised deliberately by this package derives from
:class:`ClusterSumError`, so callers can catch one type at the boundary.
The CLI maps validation-type errors to exit code 1 and runtime errors
to exit code 2.
"""


class ClusterSumError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ClusterSumError):
    """Bad input data or configuration (CLI exit code 1)."""


class MalformedCsvError(ValidationError):
    """Input CSV cannot be parsed: bad quoting, missing columns, bad cells."""


class DuplicateSentenceIdError(ValidationError):
    """Two rows share the same (file_id, sentence_id) pair."""


class EmptyTextError(ValidationError):
    """A sentence has no word tokens."""


class UnknownConceptError(ValidationError):
    """A concept label is outside the taxonomy (strict-taxonomy mode only)."""


class InvalidSpecError(ValidationError):
    """A synthetic corpus spec or run config holds out-of-range values."""


class EmptyInputError(ClusterSumError):
    """An operation received empty text, an empty vector list, or an empty slice."""


class EmptyClusterError(ClusterSumError):
    """A cluster has no member sentences."""


class DimensionMismatchError(ClusterSumError):
    """Vector dimensions disagree with each other or the backend's declared dim."""


class ZeroNormVectorError(ClusterSumError):
    """Cosine similarity is undefined for a zero-norm vector."""


class KTooLargeError(ClusterSumError):
    """Requested more clusters than there are points."""


class DegenerateInputError(ClusterSumError):
    """Clustering input is empty or otherwise unusable."""


class AlignmentError(ClusterSumError):
    """A clustering result does not line up with the slice/matrix it came from."""


class MissingMetricsError(ClusterSumError):
    """An aggregation was asked for artifacts that carry no metrics."""


class NoGroupMetadataError(ValidationError):
    """An equity report was requested for a corpus with no group metadata."""


class BackendUnavailableError(ClusterSumError):
    """An embedding or summarisation backend cannot be started or reached."""


class SidecarProtocolError(ClusterSumError):
    """A sidecar replied with an error envelope or an unparseable line."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
