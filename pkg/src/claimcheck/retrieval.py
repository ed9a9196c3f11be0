"""Feedback-driven retrieval of cross-modal evidence.

The loop searches with a graph-derived query, scores each candidate with
image match and conditional-graph match, and on failure asks the LLM to
refine the query from the failing channels and unmatched nodes, until a
candidate passes or the try budget runs out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .ergraph import EntType, ERGraph, make_template
from .errors import (
    EmptyGraphError,
    GraphBuildExhaustedError,
    ProviderUnavailableError,
    RefinementStagnantError,
)
from .graphmatch import MatchConfig, MatchReport, graph_match
from .imagematch import (
    DEFAULT_IMAGE_THRESHOLD,
    ImageMatchResult,
    VisualFeatureBundle,
    image_match,
)
from .providers import (
    EvidenceItem,
    LlmProvider,
    QueryKind,
    SearchClient,
    SearchQuery,
    build_graph,
    build_graph_conditional,
    direct_search,
    refine_search_string,
    reverse_search,
)
from .textembed import EmbeddingProvider

MAX_CANDIDATES_PER_TRY = 10

#: Query construction order: who, what, where, when, then everything else.
_QUERY_TYPE_ORDER = (EntType.PERSON, EntType.EVENT, EntType.LOCATION, EntType.DATE)


@dataclass(frozen=True)
class RetrievalConfig:
    max_tries: int = 5
    match_cfg: MatchConfig = field(default_factory=MatchConfig)
    image_threshold: float = DEFAULT_IMAGE_THRESHOLD
    allowlist: tuple[str, ...] = ()
    found_rule: str = "both"  # "both" or "image-only"
    max_candidates: int = MAX_CANDIDATES_PER_TRY

    def __post_init__(self):
        if self.max_tries < 1:
            raise ValueError("max_tries must be >= 1")
        if self.found_rule not in ("both", "image-only"):
            raise ValueError(f"unknown found_rule: {self.found_rule}")


@dataclass(frozen=True)
class CandidateResult:
    item: EvidenceItem
    image_result: Optional[ImageMatchResult]
    text_report: Optional[MatchReport]
    passed: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_url": self.item.source_url,
            "image_result": self.image_result.to_dict() if self.image_result else None,
            "text_report": self.text_report.to_dict() if self.text_report else None,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class Attempt:
    query: str
    candidates: tuple[CandidateResult, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "query": self.query,
            "candidates": [c.to_dict() for c in self.candidates],
        }


@dataclass(frozen=True)
class RetrievalTrace:
    attempts: tuple[Attempt, ...]
    outcome: str  # "FOUND" or "EXHAUSTED"
    tries_used: int
    found_item: Optional[EvidenceItem] = None
    error: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "attempts": [a.to_dict() for a in self.attempts],
            "outcome": self.outcome,
            "tries_used": self.tries_used,
            "found_item": self.found_item.to_dict() if self.found_item else None,
            "error": self.error,
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=indent, sort_keys=True)


def initial_query(claim_graph: ERGraph) -> str:
    """Space-joined entity names, ordered person, event, location, date."""
    ranked = sorted(
        enumerate(claim_graph.nodes),
        key=lambda t: (
            _QUERY_TYPE_ORDER.index(t[1].ent_type)
            if t[1].ent_type in _QUERY_TYPE_ORDER else len(_QUERY_TYPE_ORDER),
            t[0],
        ),
    )
    return " ".join(n.name for _, n in ranked)


def _score_candidate(item: EvidenceItem, claim_graph: ERGraph,
                     claim_bundle: VisualFeatureBundle, llm: LlmProvider,
                     embedder: EmbeddingProvider, cfg: RetrievalConfig) -> CandidateResult:
    image_result = None
    if item.feature_bundle is not None:
        image_result = image_match(claim_bundle, item.feature_bundle,
                                   threshold=cfg.image_threshold)
    text_report = None
    if item.contextual_text:
        template = make_template(claim_graph)
        cond = build_graph_conditional(item.contextual_text, template, llm)
        text_report = graph_match(claim_graph, [cond], embedder, cfg.match_cfg)
    image_ok = image_result is not None and image_result.matched
    text_ok = text_report is not None and text_report.matched
    passed = image_ok if cfg.found_rule == "image-only" else (image_ok and text_ok)
    return CandidateResult(item=item, image_result=image_result,
                          text_report=text_report, passed=passed)


def retrieve_visual_evidence(claim_text: str, claim_bundle: VisualFeatureBundle,
                             llm: LlmProvider, search: SearchClient,
                             embedder: EmbeddingProvider,
                             cfg: RetrievalConfig = RetrievalConfig()) -> RetrievalTrace:
    """Run the feedback retrieval loop for visual cross evidence."""
    attempts: list[Attempt] = []
    try:
        claim_graph = build_graph(claim_text, llm)
        query = initial_query(claim_graph)
        for k in range(cfg.max_tries):
            sq = SearchQuery(QueryKind.DIRECT_TEXT, query, cfg.allowlist)
            items = direct_search(sq, search)[: cfg.max_candidates]
            results = tuple(
                _score_candidate(item, claim_graph, claim_bundle, llm, embedder, cfg)
                for item in items
            )
            attempts.append(Attempt(query=query, candidates=results))
            winner = next((r for r in results if r.passed), None)
            if winner is not None:
                return RetrievalTrace(
                    attempts=tuple(attempts), outcome="FOUND",
                    tries_used=k + 1, found_item=winner.item,
                )
            if k + 1 < cfg.max_tries:
                # feed back the best candidate's scores (closest miss first)
                best = max(
                    results,
                    key=lambda r: (r.text_report.support_fraction if r.text_report else -1.0),
                    default=None,
                )
                query = refine_search_string(
                    claim_graph, query,
                    best.image_result if best else None,
                    best.text_report if best else None,
                    llm,
                )
        return RetrievalTrace(attempts=tuple(attempts), outcome="EXHAUSTED",
                              tries_used=cfg.max_tries)
    except (GraphBuildExhaustedError, ProviderUnavailableError,
            RefinementStagnantError, EmptyGraphError) as exc:
        return RetrievalTrace(attempts=tuple(attempts), outcome="EXHAUSTED",
                              tries_used=len(attempts), error=f"{type(exc).__name__}: {exc}")


def _load_evidence_file(path: Path) -> list[EvidenceItem]:
    items = []
    if path.exists():
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                items.append(EvidenceItem.from_dict(json.loads(line), base_dir=path.parent))
    return items


def load_dataset_evidence(evidence_dir: str | Path) -> tuple[list[EvidenceItem], list[EvidenceItem]]:
    """Read pre-retrieved (text, visual) evidence from an evidence directory.

    Layout: ``text.jsonl`` and ``visual.jsonl``, one serialized
    :class:`EvidenceItem` per line, bundle paths relative to the directory.
    """
    base = Path(evidence_dir)
    return _load_evidence_file(base / "text.jsonl"), _load_evidence_file(base / "visual.jsonl")


def gather_cross_evidence(claim_text: str, claim_bundle: VisualFeatureBundle,
                          llm: LlmProvider | None = None,
                          search: SearchClient | None = None,
                          embedder: EmbeddingProvider | None = None,
                          cfg: RetrievalConfig = RetrievalConfig(),
                          evidence_dir: str | Path | None = None,
                          claim_image_id: str | None = None,
                          ) -> tuple[list[EvidenceItem], list[EvidenceItem]]:
    """Collect (text evidence, visual evidence) for one claim.

    Dataset mode (``evidence_dir`` given) is a pure file load with zero
    provider calls.  Live mode reverse-searches the claim image for text
    evidence and runs the feedback loop for visual evidence.
    """
    if evidence_dir is not None:
        return load_dataset_evidence(evidence_dir)
    if llm is None or search is None or embedder is None:
        raise ValueError("live mode needs llm, search and embedder providers")

    image_ref = claim_image_id or claim_bundle.image_id
    text_evidence = reverse_search(
        SearchQuery(QueryKind.REVERSE_IMAGE, image_ref, cfg.allowlist), search
    )
    trace = retrieve_visual_evidence(claim_text, claim_bundle, llm, search, embedder, cfg)
    visual_evidence = [trace.found_item] if trace.found_item is not None else []
    return text_evidence, visual_evidence
