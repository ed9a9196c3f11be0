"""The extraction pipeline: image file in, bundle file out.

Per image: region proposals scored by gradient energy become object
features, a skin-region face detector yields face features (possibly
none), global statistics feed the scene and semantic channels, and a
rule-based caption describes the picture and is embedded for the caption
channel.  A coarse web-content heuristic sets the ``class_label`` metadata
consumed by the downstream corpus filter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .bundleio import Bundle, save
from .config import ExtractorConfig
from .encoders import ChannelEncoder, embed_text
from .errors import ModelLoadError, UnreadableImage

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp", ".webp")

_COLOR_NAMES = (
    ("red", (200, 60, 60)), ("green", (60, 160, 60)), ("blue", (60, 90, 200)),
    ("yellow", (210, 200, 70)), ("white", (235, 235, 235)),
    ("black", (25, 25, 25)), ("gray", (128, 128, 128)), ("brown", (140, 100, 60)),
)


def _load_pixels(image_path: Path, size: int) -> np.ndarray:
    try:
        with Image.open(image_path) as img:
            rgb = img.convert("RGB").resize((size, size), Image.BILINEAR)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise UnreadableImage(f"{image_path}: {exc}") from exc
    return np.asarray(rgb, dtype=np.uint8)


def _cascade_detector(cascade_path: str):
    try:
        import cv2
        detector = cv2.CascadeClassifier(cascade_path)
    except (ImportError, AttributeError) as exc:
        raise ModelLoadError(f"cascade detector unavailable: {exc}") from exc
    if detector.empty():
        raise ModelLoadError(f"face cascade failed to load: {cascade_path}")
    return detector


def _skin_boxes(pixels: np.ndarray) -> list[tuple[int, int, int, int]]:
    """Bounding boxes of contiguous skin-toned regions, in raster order.

    A classical color-rule segmentation: a pixel counts as skin when red
    dominates and the channels are sufficiently spread.  Regions smaller
    than 2% of the image or with extreme aspect ratios are discarded.
    """
    from scipy import ndimage

    floats = pixels.astype(np.int16)
    r, g, b = floats[..., 0], floats[..., 1], floats[..., 2]
    mask = ((r > 95) & (g > 40) & (b > 20) & (r > g) & (r > b)
            & ((r - np.minimum(g, b)) > 15))
    labels, count = ndimage.label(mask)
    min_area = 0.02 * mask.size
    boxes = []
    for region in ndimage.find_objects(labels):
        ys, xs = region[0], region[1]
        h, w = ys.stop - ys.start, xs.stop - xs.start
        if h * w < min_area or not 0.4 <= w / h <= 2.5:
            continue
        boxes.append((xs.start, ys.start, w, h))
    return sorted(boxes, key=lambda box: (box[1], box[0]))


def propose_regions(pixels: np.ndarray, max_regions: int) -> list[np.ndarray]:
    """Quadrant-grid proposals ranked by gradient energy, strongest first."""
    if max_regions == 0:
        return []
    size = pixels.shape[0]
    half = size // 2
    candidates = [pixels]
    for y in (0, half):
        for x in (0, half):
            candidates.append(pixels[y:y + half, x:x + half])
    gray = [c.astype(np.float32).mean(axis=2) for c in candidates]
    energy = [float(np.hypot(*np.gradient(g)).mean()) for g in gray]
    order = sorted(range(len(candidates)), key=lambda i: (-energy[i], i))
    return [candidates[i] for i in order[:max_regions]]


def detect_faces(pixels: np.ndarray, config: ExtractorConfig) -> list[np.ndarray]:
    """Face crops in raster order; an empty list is a normal outcome.

    The default detector is the self-contained skin-region segmenter; a
    cascade model file can be supplied via ``face_cascade`` instead.
    """
    if config.max_faces == 0:
        return []
    if config.face_cascade:
        detector = _cascade_detector(config.face_cascade)
        gray = np.asarray(
            np.dot(pixels[..., :3], [0.299, 0.587, 0.114]), dtype=np.uint8)
        boxes = sorted(map(tuple, detector.detectMultiScale(gray)))
    else:
        boxes = _skin_boxes(pixels)
    return [pixels[y:y + h, x:x + w] for x, y, w, h in boxes[: config.max_faces]]


def classify_image(pixels: np.ndarray) -> str:
    """Coarse content class for the corpus filter's visual stage.

    Screenshots of web pages are dominated by near-white, low-saturation
    pixels; everything else counts as a photograph.
    """
    floats = pixels.astype(np.float32)
    near_white = (floats.min(axis=2) > 220).mean()
    saturation = (floats.max(axis=2) - floats.min(axis=2)).mean()
    if near_white > 0.6 and saturation < 30:
        return "website"
    return "photograph"


def compose_caption(pixels: np.ndarray, n_faces: int) -> str:
    """Rule-based caption from global image statistics."""
    mean_rgb = pixels.reshape(-1, 3).mean(axis=0)
    color = min(_COLOR_NAMES,
                key=lambda nc: float(np.sum((mean_rgb - np.array(nc[1])) ** 2)))[0]
    brightness = pixels.mean()
    tone = "bright" if brightness > 170 else "dark" if brightness < 85 else "muted"
    subject = (f"{n_faces} people" if n_faces > 1
               else "a person" if n_faces == 1 else "a scene")
    return f"a {tone}, mostly {color} photo of {subject}"


def extract(image_path: str | Path, out_path: str | Path,
            config: ExtractorConfig = ExtractorConfig()) -> Bundle:
    """Extract one image into a bundle file; returns the written bundle."""
    image_path = Path(image_path)
    pixels = _load_pixels(image_path, config.analysis_size)

    encoders = {name: ChannelEncoder(name, config.seed)
                for name in ("objects", "faces", "place", "semantic")}
    regions = propose_regions(pixels, config.max_objects)
    faces = detect_faces(pixels, config)
    caption = compose_caption(pixels, len(faces))

    bundle = Bundle(
        image_id=image_path.stem,
        objects=tuple(encoders["objects"].encode(r) for r in regions),
        faces=tuple(encoders["faces"].encode(f) for f in faces),
        place=encoders["place"].encode(pixels),
        semantic=encoders["semantic"].encode(pixels),
        caption_text=caption,
        caption_emb=embed_text(caption, config.seed),
        metadata={"class_label": classify_image(pixels),
                  "source_image": image_path.name},
    )
    save(bundle, out_path, sidecar=config.sidecar)
    return bundle


@dataclass
class BatchReport:
    """Outcome of a directory extraction run."""

    written: list[Path] = field(default_factory=list)
    failures: list[tuple[Path, str]] = field(default_factory=list)
    manifest_path: Path | None = None


def batch_extract(in_dir: str | Path, out_dir: str | Path,
                  config: ExtractorConfig = ExtractorConfig()) -> BatchReport:
    """Extract every image under ``in_dir``; failures are listed, not fatal.

    Writes one ``<stem>.json`` bundle per image plus a ``manifest.jsonl``
    fragment (claim_id, text, bundle_path) ready for harness ingestion.
    """
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = BatchReport()
    manifest_lines: list[str] = []
    for image_path in sorted(p for p in in_dir.iterdir()
                             if p.suffix.lower() in IMAGE_SUFFIXES):
        bundle_path = out_dir / f"{image_path.stem}.json"
        try:
            bundle = extract(image_path, bundle_path, config)
        except (UnreadableImage, ModelLoadError) as exc:
            report.failures.append((image_path, str(exc)))
            continue
        report.written.append(bundle_path)
        manifest_lines.append(json.dumps({
            "claim_id": image_path.stem,
            "text": bundle.caption_text,
            "bundle_path": bundle_path.name,
        }, sort_keys=True))
    report.manifest_path = out_dir / "manifest.jsonl"
    report.manifest_path.write_text(
        "".join(line + "\n" for line in manifest_lines), encoding="utf-8")
    return report
