"""Extractor configuration and the output dimension contract."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

#: Per-channel output dimensionalities of the bundle file contract.
CHANNEL_DIMS = {
    "objects": 2048,
    "faces": 512,
    "place": 2048,
    "semantic": 1000,
    "caption": 768,
}


@dataclass(frozen=True)
class ExtractorConfig:
    """Knobs for the deterministic extraction pipeline.

    ``seed`` fixes every projection matrix, so two runs with the same
    configuration produce byte-identical bundle files.
    """

    seed: int = 0
    max_objects: int = 10
    max_faces: int = 10
    face_cascade: str = ""  # optional cascade model file; empty = built-in detector
    sidecar: bool = False
    analysis_size: int = 128  # images are resampled to this square for features

    def __post_init__(self):
        if self.max_objects < 0 or self.max_faces < 0:
            raise ValueError("max_objects and max_faces must be >= 0")
        if self.analysis_size < 8:
            raise ValueError("analysis_size must be >= 8")


def load_config(path: str | Path | None = None) -> ExtractorConfig:
    """Read a TOML or JSON config file; missing keys keep their defaults."""
    if path is None:
        return ExtractorConfig()
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix == ".json":
        obj = json.loads(raw)
    else:
        obj = tomllib.loads(raw.decode("utf-8"))
    known = {f.name for f in fields(ExtractorConfig)}
    return replace(ExtractorConfig(), **{k: v for k, v in obj.items() if k in known})
