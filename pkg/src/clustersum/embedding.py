"""Sentence embeddings: a deterministic offline stub, vector ops, backend selection.

The stub backend exists so the whole pipeline runs offline and reproducibly:
it hashes each token to seed a PRNG, draws a Gaussian vector per token, sums
them, and L2-normalises. Two texts sharing vocabulary therefore embed close
together, which is enough structure for clustering and similarity metrics.
Real models are reached through an out-of-process sidecar (see
``sidecar_client``) selected with ``sidecar:<command>``.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import DimensionMismatchError, EmptyInputError, ZeroNormVectorError

DEFAULT_DIM = 384
_MASK64 = (1 << 64) - 1
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def stable_hash64(text: str) -> int:
    """64-bit text hash that is identical across processes and platforms."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def basis_vector(dim: int) -> np.ndarray:
    vec = np.zeros(dim, dtype=np.float64)
    vec[0] = 1.0
    return vec


@lru_cache(maxsize=1 << 16)
def _token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64((stable_hash64(token) ^ seed) & _MASK64))
    return rng.standard_normal(dim)


def stub_embed(text: str, dim: int = DEFAULT_DIM, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-embedding of ``text``: unit norm, shape (dim,).

    Token order does not matter (the token vectors are summed); a text with
    no word tokens maps to the first basis vector.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        return basis_vector(dim)
    total = np.zeros(dim, dtype=np.float64)
    masked_seed = seed & _MASK64
    for token in tokens:
        total += _token_vector(token, dim, masked_seed)
    norm = float(np.linalg.norm(total))
    if norm == 0.0:
        return basis_vector(dim)
    return total / norm


@dataclass(frozen=True)
class BackendInfo:
    name: str
    dim: int


@runtime_checkable
class EmbeddingBackend(Protocol):
    """Anything that can turn a batch of texts into fixed-width vectors."""

    @property
    def info(self) -> BackendInfo: ...

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...

    def close(self) -> None: ...


class StubEmbeddingBackend:
    """In-process deterministic backend; see :func:`stub_embed`."""

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0):
        self._info = BackendInfo(name=f"stub-{dim}", dim=dim)
        self._seed = seed

    @property
    def info(self) -> BackendInfo:
        return self._info

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        return np.vstack([stub_embed(t, self._info.dim, self._seed) for t in texts])

    def close(self) -> None:  # nothing to release
        pass


def embed_batch(backend: EmbeddingBackend, texts: Sequence[str]) -> np.ndarray:
    """Encode ``texts`` and check the result against the backend's declared dim."""
    if len(texts) == 0:
        raise EmptyInputError("embed_batch needs at least one text")
    vectors = np.asarray(backend.encode(texts), dtype=np.float64)
    expected = (len(texts), backend.info.dim)
    if vectors.shape != expected:
        raise DimensionMismatchError(
            f"backend {backend.info.name} returned shape {vectors.shape}, expected {expected}"
        )
    if not np.all(np.isfinite(vectors)):
        raise DimensionMismatchError(f"backend {backend.info.name} returned non-finite values")
    return vectors


def document_embedding(vectors: np.ndarray) -> np.ndarray:
    """Mean-pool sentence vectors, then L2-normalise.

    A zero-norm mean (vectors cancelling exactly) falls back to the first
    basis vector so downstream cosine similarity stays defined.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise EmptyInputError("document_embedding needs a non-empty (n, dim) array")
    mean = vectors.mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        return basis_vector(vectors.shape[1])
    return mean / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity, clamped into [-1, 1] against rounding drift."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError(f"cosine got shapes {a.shape} and {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroNormVectorError("cosine is undefined for zero-norm vectors")
    value = float(np.dot(a, b) / (norm_a * norm_b))
    return max(-1.0, min(1.0, value))


def create_embedding_backend(selector: str, *, dim: int = DEFAULT_DIM, seed: int = 0) -> EmbeddingBackend:
    """Build a backend from a selector string: ``stub`` or ``sidecar:<command>``."""
    if selector == "stub":
        return StubEmbeddingBackend(dim=dim, seed=seed)
    if selector.startswith("sidecar:"):
        from .sidecar_client import SidecarEmbeddingBackend

        command = selector[len("sidecar:"):].strip()
        if not command:
            raise ValueError("sidecar selector needs a command: sidecar:<command>")
        return SidecarEmbeddingBackend(command)
    raise ValueError(f"unknown embedding backend selector {selector!r}")
