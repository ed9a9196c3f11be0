"""Graph comparison: node mapping, context conflicts, and edge support.

A claim graph is checked against one or more evidence graphs in three
stages: cross-graph node correspondence via thresholded linear assignment,
location/date conflict detection over the 1-hop neighborhoods of matched
nodes, and walk-based semantic support for each claim edge.  The aggregate
is a :class:`MatchReport` with the fraction of claim edges verified.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional, Sequence

import networkx as nx
import numpy as np
from scipy.optimize import linear_sum_assignment

from .ergraph import UNK, EntType, ERGraph
from .textembed import EmbeddingProvider, cosine


@dataclass(frozen=True)
class MatchConfig:
    """Engine matching thresholds; defaults follow the deployed settings."""

    node_threshold: float = 0.8
    edge_threshold: float = 0.5
    edge_support_threshold: float = 0.3
    conflict_tolerance: int = 0
    max_walk_length: int = 4

    def __post_init__(self):
        for name in ("node_threshold", "edge_threshold", "edge_support_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if self.max_walk_length < 1:
            raise ValueError("max_walk_length must be >= 1")
        if self.conflict_tolerance < 0:
            raise ValueError("conflict_tolerance must be >= 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_threshold": self.node_threshold,
            "edge_threshold": self.edge_threshold,
            "edge_support_threshold": self.edge_support_threshold,
            "conflict_tolerance": self.conflict_tolerance,
            "max_walk_length": self.max_walk_length,
        }


@dataclass(frozen=True)
class NodeMapping:
    """Injective claim-to-evidence node correspondence above threshold."""

    pairs: tuple[tuple[str, str, float], ...]
    unmatched_claim_nodes: tuple[str, ...]
    unmatched_evidence_nodes: tuple[str, ...]

    def evidence_for(self, claim_id: str) -> Optional[str]:
        for cid, eid, _ in self.pairs:
            if cid == claim_id:
                return eid
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "pairs": [list(p) for p in self.pairs],
            "unmatched_claim_nodes": list(self.unmatched_claim_nodes),
            "unmatched_evidence_nodes": list(self.unmatched_evidence_nodes),
        }


class ConflictType(Enum):
    LOCATION = "LOCATION"
    DATE = "DATE"


@dataclass(frozen=True)
class ConflictRecord:
    claim_node_id: str
    evidence_node_id: str
    conflict_type: ConflictType
    claim_context: tuple
    evidence_context: tuple

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim_node_id": self.claim_node_id,
            "evidence_node_id": self.evidence_node_id,
            "conflict_type": self.conflict_type.value,
            "claim_context": list(self.claim_context),
            "evidence_context": list(self.evidence_context),
        }


class EdgeStatusKind(Enum):
    VERIFIED = "VERIFIED"
    UNCONNECTED = "UNCONNECTED"
    DISSIMILAR = "DISSIMILAR"


@dataclass(frozen=True)
class EdgeStatus:
    claim_edge: tuple[str, str, str]
    status: EdgeStatusKind
    supporting_walk: Optional[tuple[tuple[str, str, str], ...]] = None
    walk_similarity: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim_edge": list(self.claim_edge),
            "status": self.status.value,
            "supporting_walk": [list(w) for w in self.supporting_walk] if self.supporting_walk else None,
            "walk_similarity": self.walk_similarity,
        }


@dataclass(frozen=True)
class MatchReport:
    mapping: NodeMapping
    conflicts: tuple[ConflictRecord, ...]
    edge_statuses: tuple[EdgeStatus, ...]
    support_fraction: float
    matched: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "mapping": self.mapping.to_dict(),
            "conflicts": [c.to_dict() for c in self.conflicts],
            "edge_statuses": [s.to_dict() for s in self.edge_statuses],
            "support_fraction": self.support_fraction,
            "matched": self.matched,
        }


def report_from_dict(obj: dict[str, Any]) -> MatchReport:
    """Rebuild a report from its JSON form (inverse of ``to_dict``)."""
    mapping = NodeMapping(
        pairs=tuple((p[0], p[1], float(p[2])) for p in obj["mapping"]["pairs"]),
        unmatched_claim_nodes=tuple(obj["mapping"]["unmatched_claim_nodes"]),
        unmatched_evidence_nodes=tuple(obj["mapping"]["unmatched_evidence_nodes"]),
    )
    conflicts = tuple(
        ConflictRecord(
            claim_node_id=c["claim_node_id"],
            evidence_node_id=c["evidence_node_id"],
            conflict_type=ConflictType(c["conflict_type"]),
            claim_context=tuple(c["claim_context"]),
            evidence_context=tuple(c["evidence_context"]),
        )
        for c in obj["conflicts"]
    )
    statuses = tuple(
        EdgeStatus(
            claim_edge=tuple(s["claim_edge"]),
            status=EdgeStatusKind(s["status"]),
            supporting_walk=tuple(tuple(w) for w in s["supporting_walk"])
            if s.get("supporting_walk") else None,
            walk_similarity=s.get("walk_similarity"),
        )
        for s in obj["edge_statuses"]
    )
    return MatchReport(
        mapping=mapping, conflicts=conflicts, edge_statuses=statuses,
        support_fraction=obj["support_fraction"], matched=obj["matched"],
    )


def assign_from_similarity(sim: np.ndarray, threshold: float) -> list[tuple[int, int, float]]:
    """Maximum-total-similarity injective assignment over a cross matrix.

    Entries below ``threshold`` can never be assigned; kept pairs are
    returned as (row, col, similarity) sorted by row.  The clamp-to-zero
    trick makes a full assignment over the padded matrix equivalent to the
    best threshold-filtered partial assignment.
    """
    if sim.size == 0:
        return []
    clamped = np.where(sim >= threshold, sim, 0.0)
    rows, cols = linear_sum_assignment(clamped, maximize=True)
    out = []
    for r, c in zip(rows, cols):
        if sim[r, c] >= threshold:
            out.append((int(r), int(c), float(sim[r, c])))
    out.sort()
    return out


def node_similarity_matrix(claim: ERGraph, evidence: ERGraph,
                           embedder: EmbeddingProvider) -> np.ndarray:
    """Cosine similarity of name+description embeddings, claim x evidence.

    Only cross-graph entries exist, which is the masking that forces
    inter-graph matches in the assignment step.
    """
    claim_embs = embedder.embed_batch([n.embed_text() for n in claim.nodes])
    ev_embs = embedder.embed_batch([n.embed_text() for n in evidence.nodes])
    sim = np.zeros((len(claim.nodes), len(evidence.nodes)))
    for i, ce in enumerate(claim_embs):
        for j, ee in enumerate(ev_embs):
            sim[i, j] = cosine(ce, ee)
    return sim


def map_nodes(claim: ERGraph, evidence: ERGraph, embedder: EmbeddingProvider,
              cfg: MatchConfig = MatchConfig()) -> NodeMapping:
    """Thresholded linear-assignment node correspondence."""
    sim = node_similarity_matrix(claim, evidence, embedder)
    assigned = assign_from_similarity(sim, cfg.node_threshold)
    pairs = tuple(
        (claim.nodes[r].id, evidence.nodes[c].id, s) for r, c, s in assigned
    )
    matched_c = {p[0] for p in pairs}
    matched_e = {p[1] for p in pairs}
    return NodeMapping(
        pairs=pairs,
        unmatched_claim_nodes=tuple(n.id for n in claim.nodes if n.id not in matched_c),
        unmatched_evidence_nodes=tuple(n.id for n in evidence.nodes if n.id not in matched_e),
    )


def _context_tuples(graph: ERGraph, node_id: str, ent_type: EntType) -> list[tuple]:
    """Hierarchy tuples of ``ent_type`` entities in the 1-hop neighborhood."""
    out = []
    for nb in graph.neighbors(node_id):
        if nb.ent_type is not ent_type:
            continue
        if ent_type is EntType.LOCATION and nb.location_data is not None:
            out.append(nb.location_data.as_tuple())
        elif ent_type is EntType.DATE and nb.date_data is not None:
            out.append(nb.date_data.as_tuple())
    return out


def _levels_compatible(a, b) -> bool:
    if a == UNK or b == UNK:
        return True  # UNK is a wildcard level
    if isinstance(a, str) and isinstance(b, str):
        return a.strip().casefold() == b.strip().casefold()
    return a == b


def contexts_compatible(a: tuple, b: tuple) -> bool:
    """Hierarchies agree at every level where both sides are known."""
    return all(_levels_compatible(x, y) for x, y in zip(a, b))


def find_conflict(claim: ERGraph, evidence: ERGraph, mapping: NodeMapping,
                  ent_type: EntType) -> list[ConflictRecord]:
    """Location or date disagreements around matched node pairs.

    A conflict needs context on both sides: when either neighborhood lacks
    ``ent_type`` entities there is nothing to contradict.  With context on
    both sides, the pair is consistent if any claim/evidence hierarchy pair
    is compatible under the UNK wildcard; otherwise one record is emitted.
    """
    if ent_type not in (EntType.LOCATION, EntType.DATE):
        raise ValueError(f"conflicts are defined for LOCATION/DATE, got {ent_type}")
    records = []
    for cid, eid, _sim in mapping.pairs:
        claim_ctx = _context_tuples(claim, cid, ent_type)
        ev_ctx = _context_tuples(evidence, eid, ent_type)
        if not claim_ctx or not ev_ctx:
            continue
        if any(contexts_compatible(a, b) for a in claim_ctx for b in ev_ctx):
            continue
        records.append(
            ConflictRecord(
                claim_node_id=cid,
                evidence_node_id=eid,
                conflict_type=ConflictType(ent_type.value),
                claim_context=claim_ctx[0],
                evidence_context=ev_ctx[0],
            )
        )
    return records


def _undirected_view(g: ERGraph) -> nx.Graph:
    und = nx.Graph()
    und.add_nodes_from(g.node_ids())
    for e in g.edges:
        und.add_edge(e.src, e.dst)
    return und


def _best_hop_action(g: ERGraph, a: str, b: str, claim_action_emb,
                     embedder: EmbeddingProvider) -> str:
    """Action of the edge between a and b (either direction) closest in
    meaning to the claim action, for graphs with parallel edges."""
    candidates = [e.action for e in g.edges if {e.src, e.dst} == {a, b}]
    if len(candidates) == 1:
        return candidates[0]
    scored = [
        (cosine(embedder.embed(action), claim_action_emb), action)
        for action in candidates
    ]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return scored[0][1]


def find_support(claim: ERGraph, evidence: ERGraph, mapping: NodeMapping,
                 embedder: EmbeddingProvider,
                 cfg: MatchConfig = MatchConfig()) -> list[EdgeStatus]:
    """Per-claim-edge walk support in the evidence graph.

    Endpoints must both be mapped and connected by an undirected walk of at
    most ``max_walk_length`` hops; the actions collated along the walk must
    be semantically similar to the claim action to count as VERIFIED.
    """
    und = _undirected_view(evidence)
    statuses = []
    for e in claim.edges:
        claim_edge = (e.src, e.dst, e.action)
        a_mapped = mapping.evidence_for(e.src)
        b_mapped = mapping.evidence_for(e.dst)
        if a_mapped is None or b_mapped is None:
            statuses.append(EdgeStatus(claim_edge, EdgeStatusKind.UNCONNECTED))
            continue
        try:
            path = nx.shortest_path(und, a_mapped, b_mapped)
        except nx.NetworkXNoPath:
            statuses.append(EdgeStatus(claim_edge, EdgeStatusKind.UNCONNECTED))
            continue
        if len(path) - 1 > cfg.max_walk_length:
            statuses.append(EdgeStatus(claim_edge, EdgeStatusKind.UNCONNECTED))
            continue
        claim_action_emb = embedder.embed(e.action)
        hop_actions = [
            _best_hop_action(evidence, u, v, claim_action_emb, embedder)
            for u, v in zip(path, path[1:])
        ]
        collated = " ".join(hop_actions)
        similarity = cosine(embedder.embed(collated), claim_action_emb)
        walk = tuple(
            (u, v, action) for (u, v), action in zip(zip(path, path[1:]), hop_actions)
        )
        kind = EdgeStatusKind.VERIFIED if similarity >= cfg.edge_threshold else EdgeStatusKind.DISSIMILAR
        statuses.append(EdgeStatus(claim_edge, kind, supporting_walk=walk,
                                   walk_similarity=similarity))
    return statuses


def decide_match(conflict_count: int, support_fraction: float,
                 cfg: MatchConfig) -> bool:
    """The match flag as a pure function of the report summary."""
    return (conflict_count <= cfg.conflict_tolerance
            and support_fraction >= cfg.edge_support_threshold)


_STATUS_RANK = {
    EdgeStatusKind.VERIFIED: 2,
    EdgeStatusKind.DISSIMILAR: 1,
    EdgeStatusKind.UNCONNECTED: 0,
}


def graph_match(claim: ERGraph, evidence: ERGraph | Sequence[ERGraph],
                embedder: EmbeddingProvider,
                cfg: MatchConfig = MatchConfig()) -> MatchReport:
    """Match a claim graph against one or more evidence graphs.

    A claim edge counts as verified when any evidence graph supports it;
    conflicts accumulate across all evidence graphs.  The report carries the
    node mapping of the evidence graph with the highest total pair
    similarity (first on ties).
    """
    if isinstance(evidence, ERGraph):
        evidence_list = [evidence]
    else:
        evidence_list = list(evidence)
    if not evidence_list:
        raise ValueError("evidence list must be non-empty")

    best_mapping: Optional[NodeMapping] = None
    best_total = -1.0
    all_conflicts: list[ConflictRecord] = []
    merged: dict[tuple[str, str, str], EdgeStatus] = {
        (e.src, e.dst, e.action): EdgeStatus(
            (e.src, e.dst, e.action), EdgeStatusKind.UNCONNECTED
        )
        for e in claim.edges
    }

    for ev in evidence_list:
        mapping = map_nodes(claim, ev, embedder, cfg)
        total = sum(p[2] for p in mapping.pairs)
        if total > best_total:
            best_total = total
            best_mapping = mapping
        all_conflicts.extend(find_conflict(claim, ev, mapping, EntType.LOCATION))
        all_conflicts.extend(find_conflict(claim, ev, mapping, EntType.DATE))
        for status in find_support(claim, ev, mapping, embedder, cfg):
            prev = merged[status.claim_edge]
            if _STATUS_RANK[status.status] > _STATUS_RANK[prev.status]:
                merged[status.claim_edge] = status

    statuses = tuple(merged[(e.src, e.dst, e.action)] for e in claim.edges)
    n_verified = sum(1 for s in statuses if s.status is EdgeStatusKind.VERIFIED)
    support_fraction = n_verified / len(claim.edges) if claim.edges else 0.0
    assert best_mapping is not None
    return MatchReport(
        mapping=best_mapping,
        conflicts=tuple(all_conflicts),
        edge_statuses=statuses,
        support_fraction=support_fraction,
        matched=decide_match(len(all_conflicts), support_fraction, cfg),
    )
