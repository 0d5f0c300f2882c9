"""Summary quality metrics and the text primitives they share.

Six metrics, each a pure function of the summary (and, where needed, the
original text and an embedding backend):

- diversity: unique words / total words
- relevance: cosine similarity between original and summary embeddings
- coverage: fraction of the original's unique words kept by the summary
- coherence: mean cosine similarity of consecutive summary sentences
- conciseness: reciprocal of the summary word count
- readability: Flesch reading ease,
  206.835 - 1.015 * (words/sentences) - 84.6 * (syllables/words)

Expected ranges: diversity and conciseness in (0, 1], coverage in [0, 1],
relevance and coherence in [-1, 1], readability finite but unbounded
(negative for dense prose, above 100 for trivial text).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .embedding import EmbeddingBackend, cosine, document_embedding, embed_batch
from .errors import EmptyInputError

METRIC_NAMES = ("diversity", "relevance", "coverage", "coherence", "conciseness", "readability")

# Maximal runs of letters/digits, allowing internal apostrophes and hyphens:
# "CTG-trace at 16:05" -> [ctg-trace, at, 16, 05]
_WORD_RE = re.compile(r"[^\W_]+(?:['’\-][^\W_]+)*", re.UNICODE)
_SENTENCE_BOUNDARY_RE = re.compile(r"(?<=[.!?])\s+")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


def tokenize_words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def split_sentences(text: str) -> list[str]:
    """Split on ., ! or ? followed by whitespace; a trailing fragment counts."""
    return [piece for piece in (p.strip() for p in _SENTENCE_BOUNDARY_RE.split(text)) if piece]


def count_syllables(word: str) -> int:
    """Heuristic syllable count: vowel groups, silent terminal e, floor of 1.

    "make" -> 1 (silent e), "table" -> 2 (consonant + "le" keeps the e).
    """
    w = word.lower()
    count = len(_VOWEL_GROUP_RE.findall(w))
    if w.endswith("e"):
        consonant_le = len(w) >= 3 and w.endswith("le") and w[-3] not in "aeiouy"
        if not consonant_le:
            count -= 1
    return max(count, 1)


def diversity(summary: str) -> float:
    words = tokenize_words(summary)
    if not words:
        raise EmptyInputError("diversity: summary has no word tokens")
    return len(set(words)) / len(words)


def coverage(original: str, summary: str) -> float:
    original_words = set(tokenize_words(original))
    if not original_words:
        raise EmptyInputError("coverage: original text has no word tokens")
    summary_words = set(tokenize_words(summary))
    return len(summary_words & original_words) / len(original_words)


def conciseness(summary: str) -> float:
    words = tokenize_words(summary)
    if not words:
        raise EmptyInputError("conciseness: summary has no word tokens")
    return 1.0 / len(words)


def readability(text: str) -> float:
    """Flesch reading ease over the whole text; raises on token-free input."""
    words = tokenize_words(text)
    sentences = split_sentences(text)
    if not words or not sentences:
        raise EmptyInputError("readability: text has no words or sentences")
    syllables = sum(count_syllables(w) for w in words)
    return 206.835 - 1.015 * (len(words) / len(sentences)) - 84.6 * (syllables / len(words))


def _text_embedding(text: str, backend: EmbeddingBackend, label: str):
    sentences = split_sentences(text)
    if not sentences:
        raise EmptyInputError(f"relevance: {label} text has no sentences")
    return document_embedding(embed_batch(backend, sentences))


def relevance(original: str, summary: str, backend: EmbeddingBackend) -> float:
    """Cosine similarity of mean-pooled sentence embeddings, in [-1, 1]."""
    return cosine(
        _text_embedding(original, backend, "original"),
        _text_embedding(summary, backend, "summary"),
    )


def coherence(summary: str, backend: EmbeddingBackend) -> float:
    """Mean cosine of consecutive sentence pairs; single sentence -> 1.0."""
    sentences = split_sentences(summary)
    if not sentences:
        raise EmptyInputError("coherence: summary has no sentences")
    if len(sentences) == 1:
        return 1.0
    vectors = embed_batch(backend, sentences)
    pairs = [cosine(vectors[i], vectors[i + 1]) for i in range(len(vectors) - 1)]
    return sum(pairs) / len(pairs)


@dataclass(frozen=True)
class MetricsRecord:
    diversity: float
    relevance: float
    coverage: float
    coherence: float
    conciseness: float
    readability: float

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def bounds_violations(self) -> list[str]:
        """Empty list when every value sits inside its expected range."""
        problems = []
        if not 0.0 < self.diversity <= 1.0:
            problems.append(f"diversity {self.diversity} outside (0, 1]")
        if not -1.0 <= self.relevance <= 1.0:
            problems.append(f"relevance {self.relevance} outside [-1, 1]")
        if not 0.0 <= self.coverage <= 1.0:
            problems.append(f"coverage {self.coverage} outside [0, 1]")
        if not -1.0 <= self.coherence <= 1.0:
            problems.append(f"coherence {self.coherence} outside [-1, 1]")
        if not 0.0 < self.conciseness <= 1.0:
            problems.append(f"conciseness {self.conciseness} outside (0, 1]")
        if not math.isfinite(self.readability):
            problems.append(f"readability {self.readability} is not finite")
        return problems


def evaluate_summary(original: str, summary: str, backend: EmbeddingBackend) -> MetricsRecord:
    """All six metrics for one (original, summary) pair."""
    return MetricsRecord(
        diversity=diversity(summary),
        relevance=relevance(original, summary, backend),
        coverage=coverage(original, summary),
        coherence=coherence(summary, backend),
        conciseness=conciseness(summary),
        readability=readability(summary),
    )
