"""Engine configuration: defaults, config-file loading, env overrides."""

from __future__ import annotations

import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .graphmatch import MatchConfig
from .imagematch import DEFAULT_IMAGE_THRESHOLD
from .providers import DEFAULT_MAX_RETRIES

ENV_PREFIX = "ENGINE_"


@dataclass(frozen=True)
class EngineConfig:
    match: MatchConfig = field(default_factory=MatchConfig)
    image_threshold: float = DEFAULT_IMAGE_THRESHOLD
    max_tries: int = 5
    max_retries: int = DEFAULT_MAX_RETRIES
    allowlist: tuple[str, ...] = ()
    llm_url: str = ""
    llm_model: str = ""
    search_url: str = ""
    search_key: str = ""
    embed_url: str = ""

    def to_dict(self) -> dict[str, Any]:
        out = {
            "image_threshold": self.image_threshold,
            "max_tries": self.max_tries,
            "max_retries": self.max_retries,
            "allowlist": list(self.allowlist),
            "llm_url": self.llm_url,
            "llm_model": self.llm_model,
            "search_url": self.search_url,
            "search_key": self.search_key,
            "embed_url": self.embed_url,
        }
        out.update(self.match.to_dict())
        return out


def _from_mapping(obj: dict[str, Any]) -> EngineConfig:
    match_keys = MatchConfig().to_dict().keys()
    match = MatchConfig(**{k: obj[k] for k in match_keys if k in obj})
    cfg = EngineConfig(match=match)
    simple = {
        k: obj[k]
        for k in ("image_threshold", "max_tries", "max_retries",
                  "llm_url", "llm_model", "search_url", "search_key", "embed_url")
        if k in obj
    }
    if "allowlist" in obj:
        simple["allowlist"] = tuple(obj["allowlist"])
    return replace(cfg, **simple)


def load_config(path: str | Path | None = None,
                env: dict[str, str] | None = None) -> EngineConfig:
    """Load config from a TOML or JSON file, then apply ENGINE_* env overrides."""
    obj: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        raw = path.read_bytes()
        if path.suffix == ".json":
            obj = json.loads(raw)
        else:
            obj = tomllib.loads(raw.decode("utf-8"))
    cfg = _from_mapping(obj)
    env = os.environ if env is None else env
    overrides: dict[str, Any] = {}
    for key in ("llm_url", "llm_model", "search_url", "search_key", "embed_url"):
        value = env.get(ENV_PREFIX + key.upper())
        if value:
            overrides[key] = value
    return replace(cfg, **overrides) if overrides else cfg
