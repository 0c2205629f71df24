"""Deterministic text embedder.

Hashed bag of 1- and 2-grams with signed hashing into a fixed number of
buckets, L2-normalized.  Identical text always yields an identical vector,
which makes every downstream routing / clustering / dedup decision replayable.
A remote embedder can be swapped in behind :func:`embed_text`'s contract
(unit norm, zero vector only for empty input).
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

DIM = 256

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _bucket(feature: str) -> tuple[int, float]:
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest()
    value = int.from_bytes(digest, "big")
    return value % DIM, 1.0 if (value >> 63) & 1 else -1.0


def embed_text(text: str, dim: int = DIM) -> np.ndarray:
    """Embed text into a unit vector of length ``dim``; empty text maps to zeros."""
    tokens = tokenize(text)
    vec = np.zeros(dim, dtype=np.float64)
    if not tokens:
        return vec
    features = list(tokens)
    features.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    for feature in features:
        idx, sign = _bucket(feature)
        vec[idx % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # Pathological sign cancellation; nudge with a tie-break feature so
        # non-empty text never embeds to zero.
        idx, sign = _bucket("\x00" + " ".join(tokens))
        vec[idx % dim] += sign
        norm = 1.0
    return vec / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
