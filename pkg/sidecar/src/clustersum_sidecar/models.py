"""The models the sidecar can serve.

Two builtins need no third-party packages and are fully deterministic:

- ``builtin-hash``: a bag-of-words embedder whose token vectors come from
  blake2b in counter mode, mapped to uniform floats in [-1, 1). Pure
  integer arithmetic up to the final division, so vectors are identical
  across platforms and processes.
- ``builtin-extractive``: frequency-scored sentence selection honouring
  the min/max word parameters.

The neural roster (sentence-transformers / transformers) is optional.
Those models are only advertised when the packages are importable, and
they are always loaded with local files only; this host never downloads.
"""

from __future__ import annotations

import hashlib
import math
import re
from importlib import util as importlib_util

_WORD_RE = re.compile(r"[^\W_]+(?:['’\-][^\W_]+)*", re.UNICODE)
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")

_DIGEST_BYTES = 64  # blake2b maximum; 8 floats per block
EMBED_MODEL = "all-MiniLM-L6-v2"
SUMMARY_MODELS = ("facebook/bart-large-cnn", "t5-small", "sshleifer/distilbart-cnn-12-6")
BUILTIN_EMBEDDER = "builtin-hash"
BUILTIN_SUMMARIZER = "builtin-extractive"


def _tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _split_sentences(text: str) -> list[str]:
    return [piece for piece in (p.strip() for p in _SENTENCE_RE.split(text)) if piece]


class HashEmbedder:
    """Deterministic keyed-hash embedder; same text, same vector, anywhere."""

    def __init__(self, dim: int = 384, seed: int = 0):
        if dim < 2:
            raise ValueError(f"dim must be >= 2, got {dim}")
        self.name = BUILTIN_EMBEDDER
        self.dim = dim
        self._key = f"clustersum-sidecar/{seed}".encode("utf-8")
        self._cache: dict[str, list[float]] = {}

    def _token_vector(self, token: str) -> list[float]:
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        floats: list[float] = []
        block = 0
        while len(floats) < self.dim:
            digest = hashlib.blake2b(
                f"{token}\x1f{block}".encode("utf-8"),
                digest_size=_DIGEST_BYTES,
                key=self._key,
            ).digest()
            for i in range(0, _DIGEST_BYTES, 8):
                floats.append(int.from_bytes(digest[i : i + 8], "big") / 2**63 - 1.0)
            block += 1
        vector = floats[: self.dim]
        self._cache[token] = vector
        return vector

    def encode(self, texts: list[str]) -> list[list[float]]:
        out = []
        for text in texts:
            acc = [0.0] * self.dim
            for token in _tokenize(text):
                vector = self._token_vector(token)
                for i in range(self.dim):
                    acc[i] += vector[i]
            norm = math.sqrt(sum(v * v for v in acc))
            if norm == 0.0:
                acc = [1.0] + [0.0] * (self.dim - 1)
            else:
                acc = [v / norm for v in acc]
            out.append(acc)
        return out


def extractive_summary(text: str, min_words: int, max_words: int) -> str:
    """Pick the highest-scoring sentences within the word budget.

    A sentence scores the mean corpus frequency of its tokens, so sentences
    made of recurring vocabulary rank first; ties keep document order. The
    budget is max_words, stretched only to reach min_words; output never
    exceeds twice max_words.
    """
    sentences = _split_sentences(text)
    if not sentences:
        return ""
    freq: dict[str, int] = {}
    for sentence in sentences:
        for token in _tokenize(sentence):
            freq[token] = freq.get(token, 0) + 1

    def score(sentence: str) -> float:
        tokens = _tokenize(sentence)
        if not tokens:
            return 0.0
        return sum(freq[t] for t in tokens) / len(tokens)

    ranked = sorted(range(len(sentences)), key=lambda i: (-score(sentences[i]), i))
    counts = [len(_tokenize(s)) for s in sentences]

    chosen = [ranked[0]]
    total = counts[ranked[0]]
    for i in ranked[1:]:
        if total + counts[i] > max_words:
            continue
        chosen.append(i)
        total += counts[i]
    if total < min_words:
        for i in ranked:
            if i in chosen:
                continue
            chosen.append(i)
            total += counts[i]
            if total >= min_words:
                break

    chosen.sort()
    summary = " ".join(sentences[i] for i in chosen)
    cap = 2 * max_words
    words = summary.split()
    budget = 0
    for cut, chunk in enumerate(words):
        budget += len(_tokenize(chunk))
        if budget > cap:
            return " ".join(words[:cut])
    return summary


def neural_packages_present() -> bool:
    return (
        importlib_util.find_spec("sentence_transformers") is not None
        and importlib_util.find_spec("transformers") is not None
    )


def _cached_locally(model_name: str) -> bool:
    try:
        from huggingface_hub import scan_cache_dir

        cached = {repo.repo_id for repo in scan_cache_dir().repos}
    except Exception:
        return False
    return model_name in cached or f"sentence-transformers/{model_name}" in cached


def available_summarizer_models() -> list[str]:
    """Builtin first, then whichever neural models are importable and cached."""
    models = [BUILTIN_SUMMARIZER]
    if neural_packages_present():
        models.extend(m for m in SUMMARY_MODELS if _cached_locally(m))
    return models


class NeuralSummarizer:
    """transformers summarisation pipeline, loaded lazily and offline."""

    def __init__(self, model_name: str):
        self.model_name = model_name
        self._pipe = None

    def _load(self):
        if self._pipe is None:
            from transformers import pipeline

            task = "summarization"
            self._pipe = pipeline(task, model=self.model_name, model_kwargs={"local_files_only": True})
        return self._pipe

    def __call__(self, text: str, min_words: int, max_words: int) -> str:
        pipe = self._load()
        # words ~ tokens here is approximate; the hard cap below is what the
        # caller relies on
        out = pipe(text, min_length=min_words, max_length=2 * max_words, truncation=True)
        summary = out[0]["summary_text"].strip()
        words = summary.split()
        if len(words) > 2 * max_words:
            summary = " ".join(words[: 2 * max_words])
        return summary


class MiniLMEmbedder:
    """sentence-transformers encoder, loaded at startup, offline only."""

    def __init__(self):
        from sentence_transformers import SentenceTransformer

        self.name = EMBED_MODEL
        self._model = SentenceTransformer(EMBED_MODEL, local_files_only=True)
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> list[list[float]]:
        vectors = self._model.encode(texts, normalize_embeddings=True)
        return [[float(v) for v in row] for row in vectors]
