"""Entity-relationship graph types, validation, templates and DOT export.

A graph is the structured representation of one text: typed named-entity
nodes connected by action-labeled directed edges.  Location and date nodes
carry hierarchical context tuples with an explicit ``UNK`` token for missing
levels, which downstream conflict checks treat as a wildcard.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

from .errors import DanglingReferenceError, EmptyGraphError, GraphParseError

UNK = "UNK"

_LOCATION_LEVELS = ("city", "state", "country")
_DATE_LEVELS = ("day", "month", "year")


class EntType(Enum):
    PERSON = "PERSON"
    ORG = "ORG"
    LOCATION = "LOCATION"
    DATE = "DATE"
    EVENT = "EVENT"
    OBJECT = "OBJECT"
    MISC = "MISC"


@dataclass(frozen=True)
class LocationData:
    """(city, state, country) hierarchy; ``UNK`` marks an unknown level."""

    city: str = UNK
    state: str = UNK
    country: str = UNK

    def as_tuple(self) -> tuple[str, str, str]:
        return (self.city, self.state, self.country)

    def is_empty(self) -> bool:
        return all(v == UNK for v in self.as_tuple())


@dataclass(frozen=True)
class DateData:
    """(day-of-month, month, year) hierarchy; ``UNK`` marks an unknown level."""

    day: int | str = UNK
    month: int | str = UNK
    year: int | str = UNK

    def as_tuple(self) -> tuple[int | str, int | str, int | str]:
        return (self.day, self.month, self.year)

    def is_empty(self) -> bool:
        return all(v == UNK for v in self.as_tuple())


@dataclass(frozen=True)
class EntityNode:
    id: str
    name: str
    ent_type: EntType
    description: str = ""
    location_data: Optional[LocationData] = None
    date_data: Optional[DateData] = None

    def embed_text(self) -> str:
        """Text used for node similarity: name joined with description."""
        if self.description:
            return f"{self.name}. {self.description}"
        return self.name


@dataclass(frozen=True)
class RelationEdge:
    src: str
    dst: str
    action: str
    action_description: str = ""


@dataclass(frozen=True)
class ERGraph:
    nodes: tuple[EntityNode, ...]
    edges: tuple[RelationEdge, ...]
    source_text_hash: str = ""

    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    def node(self, node_id: str) -> EntityNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def neighbors(self, node_id: str) -> list[EntityNode]:
        """Undirected 1-hop neighborhood of ``node_id``."""
        out: list[EntityNode] = []
        seen: set[str] = set()
        for e in self.edges:
            other = None
            if e.src == node_id:
                other = e.dst
            elif e.dst == node_id:
                other = e.src
            if other is not None and other not in seen:
                seen.add(other)
                out.append(self.node(other))
        return out

    def to_dict(self) -> dict[str, Any]:
        nodes = []
        for n in self.nodes:
            d: dict[str, Any] = {
                "id": n.id,
                "name": n.name,
                "ent_type": n.ent_type.value,
                "description": n.description,
            }
            if n.location_data is not None:
                d["location_data"] = {
                    "city": n.location_data.city,
                    "state": n.location_data.state,
                    "country": n.location_data.country,
                }
            if n.date_data is not None:
                d["date_data"] = {
                    "day": n.date_data.day,
                    "month": n.date_data.month,
                    "year": n.date_data.year,
                }
            nodes.append(d)
        edges = [
            {
                "src": e.src,
                "dst": e.dst,
                "action": e.action,
                "action_description": e.action_description,
            }
            for e in self.edges
        ]
        out: dict[str, Any] = {"nodes": nodes, "edges": edges}
        if self.source_text_hash:
            out["source_text_hash"] = self.source_text_hash
        return out

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=indent)


@dataclass(frozen=True)
class Violation:
    """One broken structural rule, naming the offending node or edge."""

    rule: str
    subject: str
    detail: str = ""

    def __str__(self) -> str:
        msg = f"{self.rule} on {self.subject}"
        return f"{msg}: {self.detail}" if self.detail else msg


@dataclass(frozen=True)
class GraphTemplate:
    """Claim nodes plus edge endpoints with the actions withheld.

    Used to steer evidence-graph construction toward the claim's topology.
    """

    required_nodes: tuple[EntityNode, ...]
    masked_edges: tuple[tuple[str, str], ...]


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def slugify(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug or "node"


def _normalize_location(value: Any) -> LocationData:
    """Accept a dict, a comma-separated string, or a list of levels."""
    if isinstance(value, LocationData):
        return value
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",")]
        value = list(parts)
    if isinstance(value, (list, tuple)):
        levels = list(value) + [UNK] * (3 - len(value))
        value = dict(zip(_LOCATION_LEVELS, levels[:3]))
    if not isinstance(value, dict):
        raise GraphParseError("malformed", f"unparseable location_data: {value!r}")
    out = {}
    for level in _LOCATION_LEVELS:
        raw = value.get(level, UNK)
        if raw is None:
            raw = UNK
        raw = str(raw).strip()
        out[level] = UNK if raw.lower() in ("", "unk", "unknown", "none") else raw
    return LocationData(**out)


def _normalize_date(value: Any) -> DateData:
    """Accept a dict, a list, or a ``day/month/year`` style mapping."""
    if isinstance(value, DateData):
        return value
    if isinstance(value, (list, tuple)):
        levels = list(value) + [UNK] * (3 - len(value))
        value = dict(zip(_DATE_LEVELS, levels[:3]))
    if not isinstance(value, dict):
        raise GraphParseError("malformed", f"unparseable date_data: {value!r}")
    out: dict[str, int | str] = {}
    for level in _DATE_LEVELS:
        raw = value.get(level, UNK)
        if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "unk", "unknown", "none")):
            out[level] = UNK
            continue
        try:
            out[level] = int(raw)
        except (TypeError, ValueError):
            raise GraphParseError("malformed", f"non-integer date level {level}: {raw!r}")
    return DateData(**out)


def validate_graph(g: ERGraph) -> list[Violation]:
    """Re-check every structural invariant; an empty list means valid."""
    violations: list[Violation] = []
    seen_ids: set[str] = set()
    for n in g.nodes:
        if not n.name.strip():
            violations.append(Violation("empty-name", n.id))
        if n.id in seen_ids:
            violations.append(Violation("duplicate-id", n.id))
        seen_ids.add(n.id)
        if n.ent_type is EntType.LOCATION:
            if n.location_data is None:
                violations.append(Violation("missing-location-data", n.id))
            elif n.location_data.is_empty():
                violations.append(Violation("empty-hierarchy", n.id, "all location levels UNK"))
        elif n.location_data is not None:
            violations.append(Violation("unexpected-location-data", n.id))
        if n.ent_type is EntType.DATE:
            if n.date_data is None:
                violations.append(Violation("missing-date-data", n.id))
            elif n.date_data.is_empty():
                violations.append(Violation("empty-hierarchy", n.id, "all date levels UNK"))
            else:
                d = n.date_data
                if d.day != UNK and not 1 <= int(d.day) <= 31:
                    violations.append(Violation("day-out-of-range", n.id, str(d.day)))
                if d.month != UNK and not 1 <= int(d.month) <= 12:
                    violations.append(Violation("month-out-of-range", n.id, str(d.month)))
        elif n.date_data is not None:
            violations.append(Violation("unexpected-date-data", n.id))

    ids = {n.id for n in g.nodes}
    seen_triples: set[tuple[str, str, str]] = set()
    linked: set[str] = set()
    for e in g.edges:
        subject = f"({e.src},{e.dst},{e.action})"
        if e.src == e.dst:
            violations.append(Violation("self-loop", subject))
        if e.src not in ids:
            violations.append(Violation("unknown-node", subject, e.src))
        if e.dst not in ids:
            violations.append(Violation("unknown-node", subject, e.dst))
        if not e.action.strip():
            violations.append(Violation("empty-action", subject))
        if not e.action_description.strip():
            violations.append(Violation("empty-action-description", subject))
        triple = (e.src, e.dst, e.action)
        if triple in seen_triples:
            violations.append(Violation("duplicate-edge", subject))
        seen_triples.add(triple)
        linked.add(e.src)
        linked.add(e.dst)

    for n in g.nodes:
        if n.ent_type in (EntType.LOCATION, EntType.DATE) and n.id not in linked:
            violations.append(Violation("orphan-context-node", n.id))
    return violations


def _extract_json_object(raw: str) -> dict[str, Any]:
    """Pull the first JSON object out of an LLM reply, tolerating code fences."""
    text = raw.strip()
    fence = re.search(r"```(?:json)?\s*(.*?)```", text, re.DOTALL)
    if fence:
        text = fence.group(1).strip()
    start = text.find("{")
    if start < 0:
        raise GraphParseError("malformed", "no JSON object in response")
    decoder = json.JSONDecoder()
    try:
        obj, _ = decoder.raw_decode(text[start:])
    except json.JSONDecodeError as exc:
        raise GraphParseError("malformed", f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise GraphParseError("malformed", "top-level JSON value is not an object")
    return obj


def parse_graph(raw: str, source_text: str = "") -> ERGraph:
    """Parse one LLM reply into a validated graph.

    Raises :class:`GraphParseError` with a retry-ready violation message when
    the format is broken or any structural invariant fails.
    """
    obj = _extract_json_object(raw)
    if "nodes" not in obj or "edges" not in obj:
        raise GraphParseError("malformed", 'missing "nodes" or "edges" array')
    if not isinstance(obj["nodes"], list) or not isinstance(obj["edges"], list):
        raise GraphParseError("malformed", '"nodes" and "edges" must be arrays')

    nodes: list[EntityNode] = []
    used_ids: set[str] = set()
    for item in obj["nodes"]:
        if not isinstance(item, dict):
            raise GraphParseError("malformed", f"node entry is not an object: {item!r}")
        name = str(item.get("name", "")).strip()
        try:
            ent_type = EntType(str(item.get("ent_type", "")).upper())
        except ValueError:
            raise GraphParseError("malformed", f"unknown ent_type: {item.get('ent_type')!r}")
        node_id = str(item.get("id", "")).strip()
        if not node_id:
            base = slugify(name)
            node_id = base
            ordinal = 1
            while node_id in used_ids:
                ordinal += 1
                node_id = f"{base}-{ordinal}"
        used_ids.add(node_id)
        location = None
        date = None
        if ent_type is EntType.LOCATION:
            raw_loc = item.get("location_data", item.get("data"))
            if raw_loc is not None:
                location = _normalize_location(raw_loc)
        if ent_type is EntType.DATE:
            raw_date = item.get("date_data", item.get("data"))
            if raw_date is not None:
                date = _normalize_date(raw_date)
        nodes.append(
            EntityNode(
                id=node_id,
                name=name,
                ent_type=ent_type,
                description=str(item.get("description", "")).strip(),
                location_data=location,
                date_data=date,
            )
        )

    edges: list[RelationEdge] = []
    for item in obj["edges"]:
        if not isinstance(item, dict):
            raise GraphParseError("malformed", f"edge entry is not an object: {item!r}")
        edges.append(
            RelationEdge(
                src=str(item.get("src", "")).strip(),
                dst=str(item.get("dst", "")).strip(),
                action=str(item.get("action", "")).strip(),
                action_description=str(item.get("action_description", "")).strip(),
            )
        )

    g = ERGraph(
        nodes=tuple(nodes),
        edges=tuple(edges),
        source_text_hash=text_digest(source_text) if source_text else str(obj.get("source_text_hash", "")),
    )
    violations = validate_graph(g)
    if violations:
        raise GraphParseError("invariant", str(violations[0]))
    return g


def graph_from_dict(obj: dict[str, Any]) -> ERGraph:
    """Load a graph from the documented JSON file format."""
    return parse_graph(json.dumps(obj))


def make_template(claim: ERGraph) -> GraphTemplate:
    """Project a claim graph into required nodes plus masked edge pairs."""
    if not claim.edges:
        raise EmptyGraphError("claim graph has no edges to mask")
    return GraphTemplate(
        required_nodes=claim.nodes,
        masked_edges=tuple((e.src, e.dst) for e in claim.edges),
    )


_DOT_PALETTE = (
    "lightblue", "lightgreen", "gold", "orchid", "tan",
    "aquamarine", "salmon", "khaki", "plum", "palegreen",
)


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(g: ERGraph, annotations: Any = None) -> str:
    """Render the graph as Graphviz DOT.

    With a match report, mapped claim nodes get a shared palette color per
    correspondence pair and conflicted nodes are colored red; verified edges
    are green, conflicted ones red.
    """
    matched_color: dict[str, str] = {}
    conflicted: set[str] = set()
    verified_edges: set[tuple[str, str, str]] = set()
    if annotations is not None:
        known = set(g.node_ids())
        for i, (cid, eid, _sim) in enumerate(annotations.mapping.pairs):
            for node_id in (cid, eid):
                if node_id in known:
                    matched_color[node_id] = _DOT_PALETTE[i % len(_DOT_PALETTE)]
            if cid not in known and eid not in known:
                raise DanglingReferenceError(f"mapping pair ({cid},{eid}) not in graph")
        for rec in annotations.conflicts:
            hit = {rec.claim_node_id, rec.evidence_node_id} & known
            if not hit:
                raise DanglingReferenceError(
                    f"conflict ({rec.claim_node_id},{rec.evidence_node_id}) not in graph"
                )
            conflicted |= hit
        for status in annotations.edge_statuses:
            if status.status.name == "VERIFIED":
                verified_edges.add(status.claim_edge)

    lines = ["digraph ergraph {", "  node [shape=box, style=filled, fillcolor=white];"]
    for n in g.nodes:
        attrs = [f'label="{_dot_escape(n.name)}\\n{n.ent_type.value}"']
        if n.id in conflicted:
            attrs.append("fillcolor=red")
        elif n.id in matched_color:
            attrs.append(f"fillcolor={matched_color[n.id]}")
        lines.append(f'  "{_dot_escape(n.id)}" [{", ".join(attrs)}];')
    for e in g.edges:
        attrs = [f'label="{_dot_escape(e.action)}"']
        if (e.src, e.dst, e.action) in verified_edges:
            attrs.append("color=green")
        lines.append(f'  "{_dot_escape(e.src)}" -> "{_dot_escape(e.dst)}" [{", ".join(attrs)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
