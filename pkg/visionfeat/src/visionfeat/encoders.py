"""Deterministic feature encoders.

Each channel encoder is a fixed random projection of a hand-crafted image
descriptor into the channel's contract dimensionality.  Projection matrices
are derived from the configured seed and the channel name, so identical
inputs and configuration always give bit-identical features.  The point is
a stable, model-agnostic realization of the bundle contract, not semantic
fidelity — any encoder with the right output shapes satisfies the format.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .config import CHANNEL_DIMS

#: Length of the raw image descriptor fed into every projection.
DESCRIPTOR_LEN = 24 + 32 + 16 + 4


def image_descriptor(pixels: np.ndarray) -> np.ndarray:
    """Fixed-length statistics of an RGB uint8 array (H, W, 3).

    Concatenates per-channel color histograms, a grayscale intensity
    histogram, a gradient-orientation histogram, and global moments.
    """
    pixels = np.asarray(pixels, dtype=np.float32)
    parts = []
    for c in range(3):
        hist, _ = np.histogram(pixels[..., c], bins=8, range=(0, 256))
        parts.append(hist)
    gray = pixels.mean(axis=2)
    hist, _ = np.histogram(gray, bins=32, range=(0, 256))
    parts.append(hist)
    gy, gx = np.gradient(gray)
    angles = np.arctan2(gy, gx)
    weights = np.hypot(gx, gy)
    hist, _ = np.histogram(angles, bins=16, range=(-np.pi, np.pi), weights=weights)
    parts.append(hist)
    parts.append(np.array([gray.mean(), gray.std(), weights.mean(), weights.std()]))
    desc = np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])
    norm = np.linalg.norm(desc)
    return (desc / norm if norm > 0 else desc).astype(np.float32)


def _projection(seed: int, channel: str, out_dim: int) -> np.ndarray:
    digest = hashlib.sha256(f"visionfeat:{seed}:{channel}".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    return rng.standard_normal((out_dim, DESCRIPTOR_LEN)).astype(np.float32)


class ChannelEncoder:
    """Projects image descriptors into one channel's output space."""

    def __init__(self, channel: str, seed: int):
        self.channel = channel
        self.dim = CHANNEL_DIMS[channel]
        self._weights = _projection(seed, channel, self.dim)

    def encode(self, pixels: np.ndarray) -> np.ndarray:
        vec = self._weights @ image_descriptor(pixels)
        norm = np.linalg.norm(vec)
        return (vec / norm if norm > 0 else vec).astype(np.float32)


def embed_text(text: str, seed: int, dim: int = CHANNEL_DIMS["caption"]) -> np.ndarray:
    """Deterministic bag-of-tokens text embedding for captions."""
    total = np.zeros(dim, dtype=np.float64)
    for token in text.lower().split():
        digest = hashlib.sha256(f"visionfeat-token:{seed}:{token}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        total += rng.standard_normal(dim)
    norm = np.linalg.norm(total)
    return (total / norm if norm > 0 else total).astype(np.float32)
