"""Writer for the visual feature bundle file format.

The format is the contract with the verification engine: a JSON object with
``image_id``, ``objects`` (N x 2048), ``faces`` (N x 512), ``place``
(2048), ``semantic`` (1000), ``caption_text``, ``caption_emb`` (768) and a
``metadata`` mapping; vectors may optionally live in a little-endian
float32 binary sidecar referenced as ``{"offset", "shape"}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .config import CHANNEL_DIMS


@dataclass(frozen=True)
class Bundle:
    """One extracted image, ready to serialize."""

    image_id: str
    objects: tuple[np.ndarray, ...]
    faces: tuple[np.ndarray, ...]
    place: np.ndarray
    semantic: np.ndarray
    caption_text: str
    caption_emb: Optional[np.ndarray]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        checks = [("objects", self.objects), ("faces", self.faces),
                  ("place", (self.place,)), ("semantic", (self.semantic,))]
        if self.caption_emb is not None:
            checks.append(("caption", (self.caption_emb,)))
        for channel, vectors in checks:
            for vec in vectors:
                if vec.shape != (CHANNEL_DIMS[channel],):
                    raise ValueError(
                        f"{channel} vector has shape {vec.shape}, "
                        f"contract requires ({CHANNEL_DIMS[channel]},)")


def _listify(vec: np.ndarray) -> list[float]:
    # float32 round-trip keeps the serialized text independent of any
    # float64 intermediate, which is what makes runs byte-comparable
    return [float(x) for x in np.asarray(vec, dtype=np.float32)]


def save(bundle: Bundle, path: str | Path, sidecar: bool = False) -> None:
    """Write the bundle JSON (and optional ``<stem>.bin`` vector sidecar)."""
    path = Path(path)
    if sidecar:
        blob = bytearray()

        def store(vec: np.ndarray) -> dict[str, Any]:
            raw = np.asarray(vec, dtype="<f4").tobytes()
            ref = {"offset": len(blob), "shape": list(vec.shape)}
            blob.extend(raw)
            return ref

        encode = store
    else:
        encode = _listify

    out: dict[str, Any] = {
        "image_id": bundle.image_id,
        "objects": [encode(v) for v in bundle.objects],
        "faces": [encode(v) for v in bundle.faces],
        "place": encode(bundle.place),
        "semantic": encode(bundle.semantic),
        "caption_text": bundle.caption_text,
    }
    if bundle.caption_emb is not None:
        out["caption_emb"] = encode(bundle.caption_emb)
    if bundle.metadata:
        out["metadata"] = bundle.metadata
    if sidecar:
        out["sidecar"] = path.stem + ".bin"
        (path.parent / out["sidecar"]).write_bytes(bytes(blob))
    path.write_text(json.dumps(out, sort_keys=True), encoding="utf-8")
