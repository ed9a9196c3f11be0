"""Multi-channel visual similarity with a 3-of-5 threshold rule.

An image is represented by per-channel feature vectors (object regions,
faces, place, semantic class, automated caption).  Two images match when at
least three of the five channel cosine scores clear the image threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import DimMismatchError
from .textembed import cosine

DEFAULT_IMAGE_THRESHOLD = 0.9

CHANNEL_DIMS = {
    "objects": 2048,
    "faces": 512,
    "place": 2048,
    "semantic": 1000,
    "caption": 768,
}


class Channel(Enum):
    OBJECTS = "objects"
    FACES = "faces"
    PLACE = "place"
    SEMANTIC = "semantic"
    CAPTION = "caption"


@dataclass(frozen=True)
class VisualFeatureBundle:
    """Per-image channel feature vectors plus caption text and metadata."""

    image_id: str
    place: np.ndarray
    semantic: np.ndarray
    objects: tuple[np.ndarray, ...] = ()
    faces: tuple[np.ndarray, ...] = ()
    caption_text: str = ""
    caption_emb: Optional[np.ndarray] = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        def check(name: str, vec: np.ndarray, dim: int):
            if vec.shape != (dim,):
                raise DimMismatchError(f"{name} must have dim {dim}, got {vec.shape}")

        check("place", self.place, CHANNEL_DIMS["place"])
        check("semantic", self.semantic, CHANNEL_DIMS["semantic"])
        for i, v in enumerate(self.objects):
            check(f"objects[{i}]", v, CHANNEL_DIMS["objects"])
        for i, v in enumerate(self.faces):
            check(f"faces[{i}]", v, CHANNEL_DIMS["faces"])
        if (self.caption_emb is None) != (not self.caption_text):
            raise ValueError("caption_emb present iff caption_text present")
        if self.caption_emb is not None:
            check("caption_emb", self.caption_emb, CHANNEL_DIMS["caption"])

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "image_id": self.image_id,
            "objects": [v.tolist() for v in self.objects],
            "faces": [v.tolist() for v in self.faces],
            "place": self.place.tolist(),
            "semantic": self.semantic.tolist(),
            "caption_text": self.caption_text,
        }
        if self.caption_emb is not None:
            out["caption_emb"] = self.caption_emb.tolist()
        if self.metadata:
            out["metadata"] = self.metadata
        return out


class _AbsentType:
    """Sentinel for a channel missing on either side of a comparison."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ABSENT"

    def __bool__(self):
        return False


ABSENT = _AbsentType()


@dataclass(frozen=True)
class ImageMatchResult:
    channel_scores: dict[Channel, float | _AbsentType]
    channels_passed: int
    matched: bool
    threshold: float = DEFAULT_IMAGE_THRESHOLD

    def to_dict(self) -> dict[str, Any]:
        return {
            "channel_scores": {
                ch.value: (None if score is ABSENT else score)
                for ch, score in self.channel_scores.items()
            },
            "channels_passed": self.channels_passed,
            "matched": self.matched,
            "threshold": self.threshold,
        }


def _vec_cosine(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimMismatchError(f"{a.shape} != {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def channel_score(claim: VisualFeatureBundle, evidence: VisualFeatureBundle,
                  channel: Channel) -> float | _AbsentType:
    """Per-channel cosine; multi-instance channels score their best cross pair."""
    if channel is Channel.PLACE:
        return _vec_cosine(claim.place, evidence.place)
    if channel is Channel.SEMANTIC:
        return _vec_cosine(claim.semantic, evidence.semantic)
    if channel is Channel.CAPTION:
        if claim.caption_emb is None or evidence.caption_emb is None:
            return ABSENT
        return _vec_cosine(claim.caption_emb, evidence.caption_emb)
    claim_set = claim.objects if channel is Channel.OBJECTS else claim.faces
    ev_set = evidence.objects if channel is Channel.OBJECTS else evidence.faces
    if not claim_set or not ev_set:
        return ABSENT
    return max(_vec_cosine(a, b) for a in claim_set for b in ev_set)


def image_match(claim: VisualFeatureBundle, evidence: VisualFeatureBundle,
                threshold: float = DEFAULT_IMAGE_THRESHOLD,
                use_caption: bool = True) -> ImageMatchResult:
    """3-of-5 channel verdict (3-of-4 when the caption channel is disabled).

    Absent channels never pass; the bar stays at three of the nominal
    channels, so sparse bundles cannot match trivially.
    """
    channels = list(Channel) if use_caption else [c for c in Channel if c is not Channel.CAPTION]
    scores = {ch: channel_score(claim, evidence, ch) for ch in channels}
    passed = sum(
        1 for score in scores.values() if score is not ABSENT and score >= threshold
    )
    return ImageMatchResult(
        channel_scores=scores,
        channels_passed=passed,
        matched=passed >= 3,
        threshold=threshold,
    )


def save_bundle(bundle: VisualFeatureBundle, path: str | Path,
                sidecar: bool = False) -> None:
    """Write a bundle JSON file, optionally with a float32 binary sidecar.

    With ``sidecar=True`` every vector field is replaced by
    ``{"offset": n, "shape": [...]}`` into ``<path stem>.bin`` holding
    little-endian 32-bit floats in row-major order.
    """
    path = Path(path)
    if not sidecar:
        path.write_text(json.dumps(bundle.to_dict()), encoding="utf-8")
        return

    blob = bytearray()
    offset = 0

    def store(vec: np.ndarray) -> dict[str, Any]:
        nonlocal offset
        raw = np.asarray(vec, dtype="<f4").tobytes()
        ref = {"offset": offset, "shape": list(vec.shape)}
        blob.extend(raw)
        offset += len(raw)
        return ref

    sidecar_name = path.stem + ".bin"
    out: dict[str, Any] = {
        "image_id": bundle.image_id,
        "sidecar": sidecar_name,
        "objects": [store(v) for v in bundle.objects],
        "faces": [store(v) for v in bundle.faces],
        "place": store(bundle.place),
        "semantic": store(bundle.semantic),
        "caption_text": bundle.caption_text,
    }
    if bundle.caption_emb is not None:
        out["caption_emb"] = store(bundle.caption_emb)
    if bundle.metadata:
        out["metadata"] = bundle.metadata
    (path.parent / sidecar_name).write_bytes(bytes(blob))
    path.write_text(json.dumps(out), encoding="utf-8")


def load_bundle(path: str | Path) -> VisualFeatureBundle:
    """Load (and validate) a bundle from JSON, resolving any binary sidecar."""
    path = Path(path)
    obj = json.loads(path.read_text(encoding="utf-8"))
    blob: Optional[bytes] = None
    if "sidecar" in obj:
        blob = (path.parent / obj["sidecar"]).read_bytes()

    def vec(value: Any) -> np.ndarray:
        if isinstance(value, dict):
            if blob is None:
                raise ValueError("sidecar reference without sidecar file")
            shape = tuple(value["shape"])
            count = int(np.prod(shape))
            start = value["offset"]
            arr = np.frombuffer(blob, dtype="<f4", count=count, offset=start)
            return arr.reshape(shape).astype(np.float64)
        return np.asarray(value, dtype=np.float64)

    return VisualFeatureBundle(
        image_id=obj["image_id"],
        objects=tuple(vec(v) for v in obj.get("objects", [])),
        faces=tuple(vec(v) for v in obj.get("faces", [])),
        place=vec(obj["place"]),
        semantic=vec(obj["semantic"]),
        caption_text=obj.get("caption_text", ""),
        caption_emb=vec(obj["caption_emb"]) if "caption_emb" in obj else None,
        metadata=obj.get("metadata", {}),
    )
