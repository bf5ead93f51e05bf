"""Exception types shared across the package."""


class OntologxError(Exception):
    """Base class for all package-specific errors."""


class EmptyInput(OntologxError):
    """An operation received an empty value where a non-empty one is required."""


class ParseError(OntologxError):
    """A file or payload could not be parsed into the expected structure."""


class SemanticError(OntologxError):
    """A parsed structure is internally inconsistent (e.g. dangling class reference)."""


class DimensionMismatch(OntologxError):
    """Two vectors of different dimensionality were combined."""


class ZeroVector(OntologxError):
    """A zero-norm vector was used where a direction is required."""


class EmbedderUnavailable(OntologxError):
    """The embedding backend could not be reached."""


class TransportError(OntologxError):
    """Base class for retryable generation-backend transport failures."""


class BackendUnavailable(TransportError):
    """The generation backend could not be reached."""


class BackendTimeout(TransportError):
    """The generation backend did not answer in time."""


class RateLimited(TransportError):
    """The generation backend rejected the call due to rate limiting."""


class ConformingReport(OntologxError):
    """A correction prompt was requested for a report with no violations."""


class DuplicateId(OntologxError):
    """A store write reused an existing graph id."""


class UnknownId(OntologxError):
    """A store lookup referenced an id that does not exist."""


class StorageFailure(OntologxError):
    """The store could not complete a read or write."""


class StoreUnavailable(OntologxError):
    """Persisting a validated graph failed; the pipeline outcome is still returned."""


class PoolExhausted(OntologxError):
    """The sampler ran out of candidates before reaching the target count.

    ``achieved`` carries the number of events accepted before exhaustion.
    """

    def __init__(self, message: str, achieved: int):
        super().__init__(message)
        self.achieved = achieved


class ConfigError(OntologxError):
    """Invalid configuration (unknown backend id, missing path, bad flag value)."""
