"""Rule-based verdict over image match and graph matches of cross evidence.

The decision is a fixed rule table over three booleans and a conflict flag:
does the text around the visual evidence support the claim (M_vt), does the
evidence image match the claim image (M_v), and does the text evidence
support the claim (M_t).  Conflicts in the text-evidence match force the
verdict to unverified regardless of support.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional, Sequence

from .ergraph import ERGraph, make_template
from .errors import EmptyGraphError, GraphBuildExhaustedError
from .graphmatch import MatchConfig, MatchReport, graph_match
from .imagematch import (
    ABSENT,
    DEFAULT_IMAGE_THRESHOLD,
    ImageMatchResult,
    VisualFeatureBundle,
    image_match,
)
from .providers import EvidenceItem, LlmProvider, build_graph, build_graph_conditional
from .textembed import EmbeddingProvider


class Code(Enum):
    XV_SUPPORTS = "XV-Supports"
    XV_OOC = "XV-OOC"
    XV_NS = "XV-NS"
    XT_SUPPORTS = "XT-Supports"
    XT_NS = "XT-NS"
    XT_CONFLICTS = "XT-Conflicts"


class Label(Enum):
    PRISTINE = "PRISTINE"
    FAKE = "FAKE"


@dataclass(frozen=True)
class Verdict:
    verified: bool
    label: Label
    codes: tuple[Code, ...]
    image_report: Optional[ImageMatchResult] = None
    xv_text_report: Optional[MatchReport] = None
    xt_report: Optional[MatchReport] = None
    annotations: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "verified": self.verified,
            "label": self.label.value,
            "codes": [c.value for c in self.codes],
            "image_report": self.image_report.to_dict() if self.image_report else None,
            "xv_text_report": self.xv_text_report.to_dict() if self.xv_text_report else None,
            "xt_report": self.xt_report.to_dict() if self.xt_report else None,
            "annotations": list(self.annotations),
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=indent, sort_keys=True)


def render_markdown(verdict: Verdict) -> str:
    """Human-readable report: codes, matched pairs, conflicts, image scores."""
    lines = [f"# Verdict: {verdict.label.value}", "",
             "Codes: " + ", ".join(c.value for c in verdict.codes), ""]
    for title, report in (("Visual-evidence text", verdict.xv_text_report),
                          ("Text evidence", verdict.xt_report)):
        if report is None:
            continue
        lines.append(f"## {title} (support {report.support_fraction:.2f}, "
                     f"{'matched' if report.matched else 'not matched'})")
        for cid, eid, sim in report.mapping.pairs:
            lines.append(f"- matched `{cid}` ~ `{eid}` (sim {sim:.3f})")
        for rec in report.conflicts:
            lines.append(
                f"- CONFLICT [{rec.conflict_type.value}] `{rec.claim_node_id}` vs "
                f"`{rec.evidence_node_id}`: {rec.claim_context} != {rec.evidence_context}"
            )
        for status in report.edge_statuses:
            lines.append(f"- edge {status.claim_edge}: {status.status.value}")
        lines.append("")
    if verdict.image_report is not None:
        lines.append("## Image channels")
        for ch, score in verdict.image_report.channel_scores.items():
            shown = "absent" if score is ABSENT else f"{score:.3f}"
            lines.append(f"- {ch.value}: {shown}")
        lines.append("")
    for note in verdict.annotations:
        lines.append(f"> {note}")
    return "\n".join(lines).rstrip() + "\n"


def decide(m_vt: bool, m_v: bool, m_t: bool, conflict: bool) -> tuple[tuple[Code, ...], bool]:
    """The verdict rule table: ordered explanation codes plus verified flag.

    Evaluation order is the XV block, then the XT support block, then the
    XT conflict block, which always wins.
    """
    codes: list[Code] = []
    verified = False
    if m_vt:
        if m_v:
            codes.append(Code.XV_SUPPORTS)
            verified = True
        else:
            codes.append(Code.XV_OOC)
    else:
        codes.append(Code.XV_NS)
    if m_t:
        codes.append(Code.XT_SUPPORTS)
        verified = True
    else:
        codes.append(Code.XT_NS)
    if conflict:
        codes.append(Code.XT_CONFLICTS)
        verified = False
    return tuple(codes), verified


def select_best_visual(claim_bundle: VisualFeatureBundle,
                       visual_evidence: Sequence[EvidenceItem],
                       text_support: dict[str, float] | None = None,
                       threshold: float = DEFAULT_IMAGE_THRESHOLD,
                       ) -> Optional[EvidenceItem]:
    """Rank visual evidence candidates and pick the strongest.

    Order: contextual-text support fraction, then channels passed, then mean
    present channel score; ties broken by URL for determinism.
    """
    if not visual_evidence:
        return None
    scored = []
    for item in visual_evidence:
        support = (text_support or {}).get(item.source_url, 0.0)
        passed, mean_score = 0, 0.0
        if item.feature_bundle is not None:
            result = image_match(claim_bundle, item.feature_bundle, threshold=threshold)
            present = [s for s in result.channel_scores.values() if s is not ABSENT]
            passed = result.channels_passed
            mean_score = sum(present) / len(present) if present else 0.0
        scored.append((-support, -passed, -mean_score, item.source_url, item))
    scored.sort(key=lambda t: t[:4])
    return scored[0][4]


def _match_evidence_texts(claim_graph: ERGraph, items: Sequence[EvidenceItem],
                          llm: LlmProvider, embedder: EmbeddingProvider,
                          cfg: MatchConfig) -> tuple[Optional[MatchReport], dict[str, float]]:
    """Conditional graphs for each item's contextual text, matched jointly.

    Also returns per-item support fractions for evidence ranking.
    """
    texts = [(it.source_url, it.contextual_text) for it in items if it.contextual_text]
    if not texts:
        return None, {}
    template = make_template(claim_graph)
    graphs = []
    per_item: dict[str, float] = {}
    for url, text in texts:
        g = build_graph_conditional(text, template, llm)
        graphs.append(g)
        per_item[url] = graph_match(claim_graph, [g], embedder, cfg).support_fraction
    return graph_match(claim_graph, graphs, embedder, cfg), per_item


def verify_claim(claim_text: str, claim_bundle: VisualFeatureBundle,
                 visual_evidence: Sequence[EvidenceItem],
                 text_evidence: Sequence[EvidenceItem],
                 llm: LlmProvider, embedder: EmbeddingProvider,
                 cfg: MatchConfig = MatchConfig(),
                 image_threshold: float = DEFAULT_IMAGE_THRESHOLD,
                 strict_vt_conflicts: bool = False) -> Verdict:
    """Produce the final interpretable verdict for one claim.

    Evidence lists may be empty; lack of evidence yields not-sufficient
    codes and an unverified (FAKE) verdict rather than an error.
    ``strict_vt_conflicts`` additionally lets conflicts found in the
    visual-evidence text veto verification.
    """
    try:
        claim_graph = build_graph(claim_text, llm)
    except GraphBuildExhaustedError as exc:
        return Verdict(
            verified=False, label=Label.FAKE,
            codes=(Code.XV_NS, Code.XT_NS),
            annotations=(f"EVIDENCE_ERROR: {exc}",),
        )

    annotations: list[str] = []

    def matched_texts(items):
        try:
            return _match_evidence_texts(claim_graph, items, llm, embedder, cfg)
        except (GraphBuildExhaustedError, EmptyGraphError) as exc:
            annotations.append(f"EVIDENCE_ERROR: {exc}")
            return None, {}

    xv_report, xv_support = matched_texts(visual_evidence)
    xt_report, _ = matched_texts(text_evidence)

    best = select_best_visual(claim_bundle, visual_evidence,
                              text_support=xv_support, threshold=image_threshold)
    image_report = None
    if best is not None and best.feature_bundle is not None:
        image_report = image_match(claim_bundle, best.feature_bundle,
                                   threshold=image_threshold)

    m_vt = xv_report is not None and xv_report.matched
    m_v = image_report is not None and image_report.matched
    m_t = xt_report is not None and xt_report.matched
    conflict = xt_report is not None and len(xt_report.conflicts) > cfg.conflict_tolerance
    if strict_vt_conflicts and xv_report is not None:
        conflict = conflict or len(xv_report.conflicts) > cfg.conflict_tolerance

    codes, verified = decide(m_vt, m_v, m_t, conflict)
    return Verdict(
        verified=verified,
        label=Label.PRISTINE if verified else Label.FAKE,
        codes=codes,
        image_report=image_report,
        xv_text_report=xv_report,
        xt_report=xt_report,
        annotations=tuple(annotations),
    )
