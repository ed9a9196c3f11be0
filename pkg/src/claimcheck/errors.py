"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class ClaimcheckError(Exception):
    """Base class for all engine errors."""


class GraphParseError(ClaimcheckError):
    """A structured-text graph response could not be turned into a valid graph.

    ``kind`` is either ``"malformed"`` (the response format itself is broken)
    or ``"invariant"`` (the graph parsed but violates a structural rule).
    ``violation`` names the first violated rule for retry feedback.
    """

    def __init__(self, kind: str, violation: str):
        super().__init__(f"{kind}: {violation}")
        self.kind = kind
        self.violation = violation


class EmptyGraphError(ClaimcheckError):
    """Operation requires a graph with at least one edge."""


class DanglingReferenceError(ClaimcheckError):
    """Annotations reference node or edge ids not present in the graph."""


class DimMismatchError(ClaimcheckError):
    """Two vectors that must share a dimension do not."""


class ZeroVectorError(ClaimcheckError):
    """Cosine similarity is undefined for an all-zero vector."""


class ProviderUnavailableError(ClaimcheckError):
    """Transport-level failure talking to an external provider."""


class GraphBuildExhaustedError(ClaimcheckError):
    """The LLM never produced a valid graph within the retry budget."""

    def __init__(self, attempts: int, last_violation: str):
        super().__init__(
            f"no valid graph after {attempts} attempts (last: {last_violation})"
        )
        self.attempts = attempts
        self.last_violation = last_violation


class RefinementStagnantError(ClaimcheckError):
    """Query refinement returned the prior query verbatim twice."""


class StoreUnavailableError(ClaimcheckError):
    """The evidence store cannot be read or written."""


class ManifestNotFoundError(ClaimcheckError):
    """Corpus manifest path does not exist."""


class EmptyCorpusError(ClaimcheckError):
    """Evaluation requires at least one claim record."""
