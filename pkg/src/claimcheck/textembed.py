"""Text-embedding providers and cosine similarity.

The engine only ever consumes embeddings through :class:`EmbeddingProvider`,
so all matching logic runs offline against the deterministic
:class:`StubEmbedder`.  A live deployment points :class:`HttpEmbedder` at any
HTTP endpoint speaking the ``{"texts": [...]} -> {"embeddings": [[...]]}``
protocol.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .errors import DimMismatchError, ProviderUnavailableError, ZeroVectorError


@dataclass(frozen=True)
class Embedding:
    values: tuple[float, ...]
    dim: int
    provider_id: str

    def __post_init__(self):
        if len(self.values) != self.dim:
            raise DimMismatchError(f"declared dim {self.dim} != len {len(self.values)}")
        arr = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding contains NaN or Inf")

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


class EmbeddingProvider(Protocol):
    provider_id: str

    def embed(self, text: str) -> Embedding: ...

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]: ...


def cosine(a: Embedding, b: Embedding) -> float:
    """Cosine similarity in [-1, 1]."""
    if a.dim != b.dim:
        raise DimMismatchError(f"{a.dim} != {b.dim}")
    va, vb = a.array(), b.array()
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine undefined for all-zero vector")
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


_STUB_SALT = b"claimcheck-stub-v1:"


class StubEmbedder:
    """Deterministic hash-seeded unit vectors for offline matching.

    Equal texts always map to equal vectors.  A synonym table collapses
    listed texts to one canonical form, so pairs like "protest" and
    "demonstration" embed identically and score cosine 1.0.
    """

    def __init__(self, dim: int = 64, synonyms: Mapping[str, str] | None = None,
                 synonym_groups: Iterable[Iterable[str]] | None = None):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.provider_id = f"stub-{dim}"
        self._canon: dict[str, str] = {}
        if synonyms:
            for k, v in synonyms.items():
                self._canon[self._key(k)] = self._key(v)
        if synonym_groups:
            for group in synonym_groups:
                members = [self._key(m) for m in group]
                for m in members:
                    self._canon[m] = members[0]
        self._memo: dict[str, Embedding] = {}

    @staticmethod
    def _key(text: str) -> str:
        return " ".join(text.lower().split())

    def embed(self, text: str) -> Embedding:
        key = self._key(text)
        key = self._canon.get(key, key)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        seed = int.from_bytes(hashlib.sha256(_STUB_SALT + key.encode("utf-8")).digest()[:8], "big")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.dim)
        vec /= np.linalg.norm(vec)
        emb = Embedding(values=tuple(float(x) for x in vec), dim=self.dim,
                        provider_id=self.provider_id)
        self._memo[key] = emb
        return emb

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]:
        return [self.embed(t) for t in texts]


def stub_embed(text: str, dim: int, synonyms: Mapping[str, str] | None = None) -> Embedding:
    """One-shot stub embedding; see :class:`StubEmbedder`."""
    return StubEmbedder(dim=dim, synonyms=synonyms).embed(text)


class HttpEmbedder:
    """Client for any vendor-neutral HTTP embedding endpoint."""

    def __init__(self, base_url: str, model: str = "", timeout: float = 30.0, session=None):
        import requests

        self.base_url = base_url
        self.model = model
        self.timeout = timeout
        self.provider_id = f"http:{model or base_url}"
        self._session = session or requests.Session()
        self._memo: dict[str, Embedding] = {}

    def embed(self, text: str) -> Embedding:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]:
        missing = [t for t in texts if t not in self._memo]
        if missing:
            payload: dict = {"texts": list(missing)}
            if self.model:
                payload["model"] = self.model
            try:
                resp = self._session.post(self.base_url, json=payload, timeout=self.timeout)
                resp.raise_for_status()
                vectors = resp.json()["embeddings"]
            except Exception as exc:
                raise ProviderUnavailableError(f"embedding endpoint failed: {exc}") from exc
            if len(vectors) != len(missing):
                raise ProviderUnavailableError("embedding count mismatch in response")
            for text, vec in zip(missing, vectors):
                self._memo[text] = Embedding(
                    values=tuple(float(x) for x in vec), dim=len(vec),
                    provider_id=self.provider_id,
                )
        return [self._memo[t] for t in texts]
