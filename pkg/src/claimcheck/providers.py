"""External capability clients: LLM graph building, search, and the cache.

Every provider has a deterministic mock so the whole engine runs offline:
:class:`MockLlm` replays scripted transcripts or routes on prompt content,
and :class:`MockSearchClient` serves a local index file.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional, Protocol, Sequence
from urllib.parse import urlparse

from . import prompts
from .ergraph import ERGraph, GraphTemplate, parse_graph
from .errors import (
    GraphBuildExhaustedError,
    GraphParseError,
    ProviderUnavailableError,
    RefinementStagnantError,
    StoreUnavailableError,
)
from .imagematch import VisualFeatureBundle, load_bundle

DEFAULT_MAX_RETRIES = 3

#: Trusted Spanish news outlets used as the default allowlist in Remiss mode.
REMISS_DOMAINS = (
    "elpais.com", "elmundo.es", "abc.es", "lavanguardia.com", "larazon.es",
    "naciodigital.cat", "marca.com", "granadahoy.com", "ecuadoretxea.org",
    "eldiario.es", "diariocordoba.com", "publico.es", "beteve.cat",
    "radiosabadell.com", "elespanol.com",
)


class LlmProvider(Protocol):
    provider_id: str

    def complete(self, prompt: str) -> str: ...


class QueryKind(Enum):
    DIRECT_TEXT = "DIRECT_TEXT"
    REVERSE_IMAGE = "REVERSE_IMAGE"


@dataclass(frozen=True)
class SearchQuery:
    kind: QueryKind
    payload: str
    domain_allowlist: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.payload:
            raise ValueError("query payload must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "payload": self.payload,
            "domain_allowlist": list(self.domain_allowlist),
        }


def domain_of(url: str) -> str:
    host = urlparse(url).hostname or ""
    return host[4:] if host.startswith("www.") else host


@dataclass(frozen=True)
class EvidenceItem:
    source_url: str
    contextual_text: Optional[str] = None
    feature_bundle: Optional[VisualFeatureBundle] = None
    retrieved_at: str = ""
    query_used: Optional[SearchQuery] = None
    bundle_path: Optional[str] = None

    def __post_init__(self):
        if self.contextual_text is None and self.feature_bundle is None and self.bundle_path is None:
            raise ValueError("evidence needs contextual text or a feature bundle")

    @property
    def source_domain(self) -> str:
        return domain_of(self.source_url)

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_url": self.source_url,
            "source_domain": self.source_domain,
            "contextual_text": self.contextual_text,
            "bundle_path": self.bundle_path,
            "retrieved_at": self.retrieved_at,
            "query_used": self.query_used.to_dict() if self.query_used else None,
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any], base_dir: str | Path | None = None) -> "EvidenceItem":
        bundle = None
        bundle_path = obj.get("bundle_path")
        if bundle_path:
            path = Path(bundle_path)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            bundle = load_bundle(path)
        query = None
        if obj.get("query_used"):
            q = obj["query_used"]
            query = SearchQuery(QueryKind(q["kind"]), q["payload"],
                                tuple(q.get("domain_allowlist", ())))
        return cls(
            source_url=obj["source_url"],
            contextual_text=obj.get("contextual_text"),
            feature_bundle=bundle,
            retrieved_at=obj.get("retrieved_at", ""),
            query_used=query,
            bundle_path=bundle_path,
        )


class SearchClient(Protocol):
    def search(self, query: SearchQuery) -> list[EvidenceItem]: ...


# ---------------------------------------------------------------------------
# Graph building with retry-until-valid

def _render(template: str, **fields: str) -> str:
    # the templates contain literal JSON braces, so str.format is unusable
    for key, value in fields.items():
        template = template.replace("{" + key + "}", value)
    return template


def _render_build_prompt(text: str, violation: str | None) -> str:
    feedback = _render(prompts.RETRY_FEEDBACK_TEMPLATE, violation=violation) if violation else ""
    return _render(prompts.BUILD_GRAPH_TEMPLATE, text=text, feedback=feedback)


def _render_conditional_prompt(text: str, template: GraphTemplate,
                               violation: str | None) -> str:
    nodes = "\n".join(
        f"- {n.id}: {n.name} ({n.ent_type.value}) -- {n.description}"
        for n in template.required_nodes
    )
    masked = "\n".join(f"- ({src}, {dst})" for src, dst in template.masked_edges)
    feedback = _render(prompts.RETRY_FEEDBACK_TEMPLATE, violation=violation) if violation else ""
    return _render(
        prompts.BUILD_GRAPH_CONDITIONAL_TEMPLATE,
        nodes=nodes, masked_pairs=masked, text=text, feedback=feedback,
    )


def _build_with_retry(render: Callable[[str | None], str], source_text: str,
                      llm: LlmProvider, max_retries: int,
                      extra_check: Callable[[ERGraph], str | None] | None = None) -> ERGraph:
    violation: str | None = None
    for _ in range(max_retries):
        reply = llm.complete(render(violation))
        try:
            graph = parse_graph(reply, source_text=source_text)
        except GraphParseError as exc:
            violation = exc.violation
            continue
        if extra_check is not None:
            problem = extra_check(graph)
            if problem is not None:
                violation = problem
                continue
        return graph
    raise GraphBuildExhaustedError(max_retries, violation or "unknown")


def build_graph(text: str, llm: LlmProvider,
                max_retries: int = DEFAULT_MAX_RETRIES) -> ERGraph:
    """Prompt the LLM for a claim graph, retrying with violation feedback."""
    if not text.strip():
        raise ValueError("text must be non-empty")
    return _build_with_retry(
        lambda v: _render_build_prompt(text, v), text, llm, max_retries
    )


def build_graph_conditional(evidence_text: str, template: GraphTemplate,
                            llm: LlmProvider,
                            max_retries: int = DEFAULT_MAX_RETRIES) -> ERGraph:
    """Build an evidence graph steered by the claim's nodes and topology.

    Beyond the standard graph checks, every template node whose name occurs
    in the evidence text must appear in the returned graph.
    """
    if not template.required_nodes:
        raise ValueError("template must have required nodes")
    lowered = evidence_text.lower()

    def check_coverage(graph: ERGraph) -> str | None:
        names = {n.name.lower() for n in graph.nodes}
        for n in template.required_nodes:
            if n.name.lower() in lowered and n.name.lower() not in names:
                return f"claim entity '{n.name}' is mentioned in the text but missing from the graph"
        return None

    return _build_with_retry(
        lambda v: _render_conditional_prompt(evidence_text, template, v),
        evidence_text, llm, max_retries, extra_check=check_coverage,
    )


# ---------------------------------------------------------------------------
# Search

def _apply_allowlist(items: list[EvidenceItem], allowlist: Sequence[str]) -> list[EvidenceItem]:
    if not allowlist:
        return items
    allowed = set(allowlist)
    return [it for it in items if it.source_domain in allowed]


def direct_search(query: SearchQuery, client: SearchClient) -> list[EvidenceItem]:
    """Text search for pages with images; allowlist-filtered, engine order."""
    if query.kind is not QueryKind.DIRECT_TEXT:
        raise ValueError("direct_search requires a DIRECT_TEXT query")
    return _apply_allowlist(client.search(query), query.domain_allowlist)


def reverse_search(query: SearchQuery, client: SearchClient) -> list[EvidenceItem]:
    """Reverse image search; an empty result list is a normal outcome."""
    if query.kind is not QueryKind.REVERSE_IMAGE:
        raise ValueError("reverse_search requires a REVERSE_IMAGE query")
    return _apply_allowlist(client.search(query), query.domain_allowlist)


# ---------------------------------------------------------------------------
# Query refinement

def refine_search_string(claim_graph: ERGraph, prior_query: str,
                         image_feedback, text_feedback,
                         llm: LlmProvider) -> str:
    """Ask the LLM for a new query driven by match feedback.

    Failing image channels and unmatched claim nodes go into the prompt; the
    reply must differ from the prior query, with one retry before
    :class:`RefinementStagnantError`.
    """
    from .imagematch import ABSENT  # local import avoids a cycle at module load

    failed = []
    if image_feedback is not None:
        for ch, score in image_feedback.channel_scores.items():
            if score is ABSENT or score < image_feedback.threshold:
                failed.append(ch.value)
    unmatched_ids = set(text_feedback.mapping.unmatched_claim_nodes) if text_feedback else set()
    unmatched = [n.name for n in claim_graph.nodes if n.id in unmatched_ids]
    all_entities = [n.name for n in claim_graph.nodes]

    prompt = _render(
        prompts.REFINE_QUERY_TEMPLATE,
        prior_query=prior_query,
        failed_channels=", ".join(failed) or "none",
        unmatched_entities=", ".join(unmatched) or "none",
        all_entities=", ".join(all_entities),
    )
    for _ in range(2):
        reply = llm.complete(prompt).strip().splitlines()
        candidate = reply[0].strip() if reply else ""
        if candidate and candidate != prior_query:
            return candidate
    raise RefinementStagnantError(f"refinement stuck on query: {prior_query!r}")


# ---------------------------------------------------------------------------
# Evidence cache

def _cache_key(query_payload: str, url: str) -> str:
    digest = hashlib.sha256(query_payload.encode("utf-8")).hexdigest()[:16]
    return f"{digest}:{url}"


class EvidenceCache:
    """Append-only JSON-lines store keyed by (query digest, url)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._items: dict[str, dict[str, Any]] = {}
        if self.path.exists():
            try:
                for line in self.path.read_text(encoding="utf-8").splitlines():
                    if line.strip():
                        obj = json.loads(line)
                        self._items[obj["_key"]] = obj
            except (OSError, json.JSONDecodeError, KeyError) as exc:
                raise StoreUnavailableError(f"corrupt evidence store {self.path}: {exc}") from exc

    def put(self, item: EvidenceItem) -> str:
        payload = item.query_used.payload if item.query_used else ""
        key = _cache_key(payload, item.source_url)
        if key not in self._items:
            obj = item.to_dict()
            obj["_key"] = key
            self._items[key] = obj
            try:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(obj) + "\n")
            except OSError as exc:
                raise StoreUnavailableError(str(exc)) from exc
        return key

    def get(self, query_payload: str, url: str) -> Optional[EvidenceItem]:
        obj = self._items.get(_cache_key(query_payload, url))
        if obj is None:
            return None
        return EvidenceItem.from_dict(obj, base_dir=self.path.parent)

    def __len__(self) -> int:
        return len(self._items)


# ---------------------------------------------------------------------------
# Mocks

class MockLlm:
    """Deterministic LLM double.

    Either replays a fixed transcript of replies in order, or routes each
    prompt through a responder callable.  All prompts are recorded for
    assertions on prompt content and call counts.
    """

    provider_id = "mock-llm"

    def __init__(self, transcript: Sequence[str] | None = None,
                 responder: Callable[[str], str] | None = None):
        if (transcript is None) == (responder is None):
            raise ValueError("provide exactly one of transcript / responder")
        self._transcript = list(transcript) if transcript is not None else None
        self._responder = responder
        self.prompts: list[str] = []

    @property
    def calls(self) -> int:
        return len(self.prompts)

    def complete(self, prompt: str) -> str:
        self.prompts.append(prompt)
        if self._responder is not None:
            return self._responder(prompt)
        assert self._transcript is not None
        if not self._transcript:
            raise ProviderUnavailableError("mock transcript exhausted")
        return self._transcript.pop(0)


#: Fixed timestamp used by mocks so serialized traces are byte-stable.
MOCK_TIMESTAMP = "1970-01-01T00:00:00+00:00"


class MockSearchClient:
    """Search double backed by an in-memory page index.

    Index format (also loadable from a JSON file): ``{"pages": [{"url",
    "text", "image_id"?, "bundle_path"?, "terms"?}]}``.  Direct queries rank
    pages by overlap between query terms and the page text (or explicit
    ``terms``); reverse queries match the payload against ``image_id``.
    """

    def __init__(self, pages: Sequence[dict[str, Any]], base_dir: str | Path | None = None):
        self.pages = list(pages)
        self.base_dir = Path(base_dir) if base_dir else None
        self.queries: list[SearchQuery] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "MockSearchClient":
        path = Path(path)
        obj = json.loads(path.read_text(encoding="utf-8"))
        return cls(obj["pages"], base_dir=path.parent)

    def _item(self, page: dict[str, Any], query: SearchQuery) -> EvidenceItem:
        bundle = None
        if page.get("bundle_path"):
            bundle_path = Path(page["bundle_path"])
            if self.base_dir is not None and not bundle_path.is_absolute():
                bundle_path = self.base_dir / bundle_path
            bundle = load_bundle(bundle_path)
        return EvidenceItem(
            source_url=page["url"],
            contextual_text=page.get("text"),
            feature_bundle=bundle,
            retrieved_at=MOCK_TIMESTAMP,
            query_used=query,
            bundle_path=page.get("bundle_path"),
        )

    def search(self, query: SearchQuery) -> list[EvidenceItem]:
        self.queries.append(query)
        if query.kind is QueryKind.REVERSE_IMAGE:
            return [
                self._item(p, query) for p in self.pages
                if p.get("image_id") == query.payload
            ]
        terms = {t for t in query.payload.lower().split() if t}
        scored = []
        for i, page in enumerate(self.pages):
            haystack = page.get("terms") or page.get("text", "").lower().split()
            overlap = len(terms & set(haystack))
            if overlap > 0:
                scored.append((-overlap, i, page))
        scored.sort()
        return [self._item(p, query) for _, _, p in scored]


class HttpSearchClient:
    """Minimal client for a programmable-search style JSON endpoint."""

    def __init__(self, base_url: str, api_key: str = "", timeout: float = 30.0, session=None):
        import requests

        self.base_url = base_url
        self.api_key = api_key
        self.timeout = timeout
        self._session = session or requests.Session()

    def search(self, query: SearchQuery) -> list[EvidenceItem]:
        params = {"q": query.payload, "kind": query.kind.value}
        if self.api_key:
            params["key"] = self.api_key
        try:
            resp = self._session.get(self.base_url, params=params, timeout=self.timeout)
            resp.raise_for_status()
            results = resp.json().get("items", [])
        except Exception as exc:
            raise ProviderUnavailableError(f"search endpoint failed: {exc}") from exc
        now = datetime.now(timezone.utc).isoformat()
        items = []
        for r in results:
            items.append(
                EvidenceItem(
                    source_url=r["url"],
                    contextual_text=r.get("text"),
                    retrieved_at=now,
                    query_used=query,
                    bundle_path=r.get("bundle_path"),
                )
            )
        return items


class HttpLlm:
    """Client for a plain HTTPS completion endpoint."""

    def __init__(self, base_url: str, model: str = "", timeout: float = 60.0, session=None):
        import requests

        self.base_url = base_url
        self.model = model
        self.provider_id = f"http:{model or base_url}"
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, prompt: str) -> str:
        payload: dict[str, Any] = {"prompt": prompt}
        if self.model:
            payload["model"] = self.model
        try:
            resp = self._session.post(self.base_url, json=payload, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()["text"]
        except Exception as exc:
            raise ProviderUnavailableError(f"llm endpoint failed: {exc}") from exc
