"""Corpus loading, the tweet-corpus filter pipeline, and batch evaluation."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

from .errors import EmptyCorpusError, ManifestNotFoundError
from .graphmatch import MatchConfig
from .imagematch import DEFAULT_IMAGE_THRESHOLD, load_bundle
from .providers import LlmProvider
from .retrieval import load_dataset_evidence
from .textembed import EmbeddingProvider, cosine
from .verify import Label, Verdict, verify_claim

log = logging.getLogger(__name__)

ALIGNMENT_THRESHOLD = 0.40
FAKENESS_THRESHOLD = 0.45
REJECTED_IMAGE_CLASSES = ("website", "internet")


@dataclass(frozen=True)
class ClaimRecord:
    claim_id: str
    text: str
    bundle_path: str
    label: Optional[Label] = None
    evidence_dir: Optional[str] = None
    fakeness_score: Optional[float] = None
    caption_alignment: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim_id": self.claim_id,
            "text": self.text,
            "bundle_path": self.bundle_path,
            "label": self.label.value if self.label else None,
            "evidence_dir": self.evidence_dir,
            "fakeness_score": self.fakeness_score,
            "caption_alignment": self.caption_alignment,
        }


@dataclass
class LoadReport:
    records: list[ClaimRecord]
    skipped: list[tuple[int, str]]  # (line number, reason)


def load_corpus(manifest: str | Path, base_dir: str | Path | None = None) -> LoadReport:
    """Read a JSON-lines manifest; bad lines are reported, not fatal."""
    manifest = Path(manifest)
    if not manifest.exists():
        raise ManifestNotFoundError(str(manifest))
    base = Path(base_dir) if base_dir else manifest.parent
    records: list[ClaimRecord] = []
    skipped: list[tuple[int, str]] = []
    for lineno, line in enumerate(manifest.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            skipped.append((lineno, f"invalid JSON: {exc}"))
            continue
        missing = [k for k in ("claim_id", "text", "bundle_path") if not obj.get(k)]
        if missing:
            skipped.append((lineno, f"missing fields: {', '.join(missing)}"))
            continue
        bundle_path = obj["bundle_path"]
        if not Path(bundle_path).is_absolute():
            bundle_path = str(base / bundle_path)
        evidence_dir = obj.get("evidence_dir")
        if evidence_dir and not Path(evidence_dir).is_absolute():
            evidence_dir = str(base / evidence_dir)
        label = None
        if obj.get("label"):
            try:
                label = Label(obj["label"])
            except ValueError:
                skipped.append((lineno, f"unknown label: {obj['label']!r}"))
                continue
        records.append(
            ClaimRecord(
                claim_id=str(obj["claim_id"]),
                text=obj["text"],
                bundle_path=bundle_path,
                label=label,
                evidence_dir=evidence_dir,
                fakeness_score=obj.get("fakeness_score"),
                caption_alignment=obj.get("caption_alignment"),
            )
        )
    return LoadReport(records=records, skipped=skipped)


@dataclass(frozen=True)
class FilterRejection:
    record: ClaimRecord
    stage: str
    reason: str


def _alignment(record: ClaimRecord, embedder: EmbeddingProvider | None) -> Optional[float]:
    if record.caption_alignment is not None:
        return record.caption_alignment
    if embedder is None:
        return None
    try:
        bundle = load_bundle(record.bundle_path)
    except (OSError, ValueError, KeyError):
        return None
    if not bundle.caption_text:
        return None
    return cosine(embedder.embed(bundle.caption_text), embedder.embed(record.text))


def filter_corpus(records: Sequence[ClaimRecord], mode: str = "remiss",
                  embedder: EmbeddingProvider | None = None,
                  ) -> tuple[list[ClaimRecord], list[FilterRejection]]:
    """Apply the corpus filter stages in their fixed order.

    Stages: multimodal presence, caption-text alignment > 0.40, image class
    not website/internet, fakeness score > 0.45 (applied only when the score
    is present).  ``mode="newsclippings"`` stops after the multimodal stage.
    Filtering the kept set again is a no-op.
    """
    kept: list[ClaimRecord] = []
    rejected: list[FilterRejection] = []
    for record in records:
        bundle_path = Path(record.bundle_path)
        if not bundle_path.exists():
            rejected.append(FilterRejection(record, "multimodal", "bundle file missing"))
            continue
        if mode == "newsclippings":
            kept.append(record)
            continue

        alignment = _alignment(record, embedder)
        if alignment is not None and not alignment > ALIGNMENT_THRESHOLD:
            rejected.append(FilterRejection(
                record, "alignment", f"caption alignment {alignment} <= {ALIGNMENT_THRESHOLD}"))
            continue

        try:
            class_label = load_bundle(bundle_path).metadata.get("class_label", "")
        except (OSError, ValueError, KeyError):
            class_label = ""
        if class_label.lower() in REJECTED_IMAGE_CLASSES:
            rejected.append(FilterRejection(
                record, "visual", f"image class {class_label!r} is rich-media web content"))
            continue

        if record.fakeness_score is not None and not record.fakeness_score > FAKENESS_THRESHOLD:
            rejected.append(FilterRejection(
                record, "text", f"fakeness score {record.fakeness_score} <= {FAKENESS_THRESHOLD}"))
            continue
        kept.append(record)
    return kept, rejected


@dataclass
class EvalSummary:
    overall_acc: float
    fake_acc: Optional[float]
    pristine_acc: Optional[float]
    confusion: dict[str, int]
    edge_count_histogram: dict[int, dict[str, int]]  # edge count -> {total, correct}
    errors: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "overall_acc": self.overall_acc,
            "fake_acc": self.fake_acc,
            "pristine_acc": self.pristine_acc,
            "confusion": dict(self.confusion),
            "edge_count_histogram": {
                str(k): dict(v) for k, v in sorted(self.edge_count_histogram.items())
            },
            "errors": self.errors,
        }


def evaluate(records: Sequence[ClaimRecord], llm: LlmProvider,
             embedder: EmbeddingProvider, cfg: MatchConfig = MatchConfig(),
             image_threshold: float = DEFAULT_IMAGE_THRESHOLD,
             out_dir: str | Path | None = None, jobs: int = 1,
             ) -> EvalSummary:
    """Verify every labeled record against its dataset-mode evidence.

    Per-claim verdicts are written to ``out_dir`` as JSON when given.
    Per-claim errors count as incorrect predictions, never abort the run.
    """
    if not records:
        raise EmptyCorpusError("no records to evaluate")
    unlabeled = [r.claim_id for r in records if r.label is None]
    if unlabeled:
        raise EmptyCorpusError(f"records without labels: {unlabeled[:5]}")

    def run_one(record: ClaimRecord) -> tuple[ClaimRecord, Optional[Verdict], Optional[str]]:
        try:
            bundle = load_bundle(record.bundle_path)
            if record.evidence_dir:
                text_ev, visual_ev = load_dataset_evidence(record.evidence_dir)
            else:
                text_ev, visual_ev = [], []
            verdict = verify_claim(record.text, bundle, visual_ev, text_ev,
                                   llm, embedder, cfg, image_threshold)
            return record, verdict, None
        except Exception as exc:  # noqa: BLE001 - per-claim isolation
            log.warning("claim %s failed: %s", record.claim_id, exc)
            return record, None, f"{type(exc).__name__}: {exc}"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, records))
    else:
        results = [run_one(r) for r in records]
    # deterministic aggregation regardless of worker scheduling
    results.sort(key=lambda t: t[0].claim_id)

    confusion = {"fake_correct": 0, "fake_wrong": 0,
                 "pristine_correct": 0, "pristine_wrong": 0}
    histogram: dict[int, dict[str, int]] = {}
    out_path = Path(out_dir) if out_dir else None
    if out_path:
        out_path.mkdir(parents=True, exist_ok=True)
    errors = 0
    for record, verdict, error in results:
        predicted = verdict.label if verdict is not None else None
        correct = predicted == record.label
        if error is not None:
            errors += 1
        group = "fake" if record.label is Label.FAKE else "pristine"
        confusion[f"{group}_{'correct' if correct else 'wrong'}"] += 1

        edge_count = 0
        if verdict is not None and verdict.xt_report is not None:
            edge_count = len(verdict.xt_report.edge_statuses)
        elif verdict is not None and verdict.xv_text_report is not None:
            edge_count = len(verdict.xv_text_report.edge_statuses)
        bucket = histogram.setdefault(edge_count, {"total": 0, "correct": 0})
        bucket["total"] += 1
        bucket["correct"] += int(correct)

        if out_path:
            payload = {
                "claim_id": record.claim_id,
                "label": record.label.value if record.label else None,
                "verdict": verdict.to_dict() if verdict else None,
                "error": error,
            }
            (out_path / f"{record.claim_id}.json").write_text(
                json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True),
                encoding="utf-8",
            )

    total = len(results)
    n_fake = confusion["fake_correct"] + confusion["fake_wrong"]
    n_pristine = confusion["pristine_correct"] + confusion["pristine_wrong"]
    return EvalSummary(
        overall_acc=(confusion["fake_correct"] + confusion["pristine_correct"]) / total,
        fake_acc=confusion["fake_correct"] / n_fake if n_fake else None,
        pristine_acc=confusion["pristine_correct"] / n_pristine if n_pristine else None,
        confusion=confusion,
        edge_count_histogram=histogram,
        errors=errors,
    )
