"""Turning clusters into summaries, headings, and traceable artifacts.

A cluster's member sentences are concatenated in corpus order into the
original text T. T then goes through one of two routes:

- an abstractive backend (out-of-process sidecar) via :func:`summarize`,
  with a hard output cap of twice ``max_words``;
- the extractive fallback, which needs no model: members are ranked by
  cosine similarity to the cluster centroid and appended greedily while the
  total stays within ``max_words``.

Headings are the most document-like short phrase: candidate n-grams are
embedded and picked by maximal marginal relevance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .clustering import Cluster, EmbeddingMatrix
from .corpus import ConceptSlice
from .errors import (
    AlignmentError,
    EmptyClusterError,
    EmptyInputError,
    InvalidSpecError,
)
from .embedding import EmbeddingBackend, cosine, embed_batch
from .metrics import MetricsRecord, split_sentences, tokenize_words

STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are as at be because
    been before being below between both but by could did do does doing down
    during each few for from further had has have having he her here hers
    herself him himself his how i if in into is it its itself just me more
    most my myself no nor not now of off on once only or other our ours
    ourselves out over own same she should so some such than that the their
    theirs them themselves then there these they this those through to too
    under until up very was we were what when where which while who whom why
    will with would you your yours yourself yourselves
    """.split()
)

HEADING_MAX_WORDS = 8
_FALLBACK_HEADING_WORDS = 5


@dataclass(frozen=True)
class SummaryParams:
    """Length bounds for one summarisation call; ``model`` names the target model."""

    min_words: int = 20
    max_words: int = 60
    model: str = ""

    def __post_init__(self) -> None:
        if not 0 < self.min_words <= self.max_words:
            raise InvalidSpecError(
                f"need 0 < min_words <= max_words, got ({self.min_words}, {self.max_words})"
            )


@dataclass(frozen=True)
class SummaryArtifact:
    """One cluster's output: heading, summary, provenance, and metrics."""

    concept: str
    cluster_index: int
    heading: str
    summary: str
    source_ids: tuple[tuple[str, str], ...]
    model: str
    metrics: MetricsRecord | None = None


@runtime_checkable
class Summarizer(Protocol):
    @property
    def name(self) -> str: ...

    def summarize(self, text: str, params: SummaryParams) -> str: ...

    def close(self) -> None: ...


class ExtractiveSummarizer:
    """Marker backend: summaries come from :func:`extractive_fallback_summarize`."""

    name = "extractive"

    def summarize(self, text: str, params: SummaryParams) -> str:
        raise NotImplementedError(
            "the extractive route works on clusters, not raw text; "
            "call extractive_fallback_summarize"
        )

    def close(self) -> None:
        pass


def create_summarizer(selector: str) -> Summarizer:
    """Build a summariser from ``extractive`` or ``sidecar:<command>``."""
    if selector == "extractive":
        return ExtractiveSummarizer()
    if selector.startswith("sidecar:"):
        from .sidecar_client import SidecarSummarizer

        command = selector[len("sidecar:"):].strip()
        if not command:
            raise ValueError("sidecar selector needs a command: sidecar:<command>")
        return SidecarSummarizer(command)
    raise ValueError(f"unknown summarizer selector {selector!r}")


def _normalize_sentence(text: str) -> str:
    text = text.strip()
    if text and text[-1] not in ".!?":
        text += "."
    return text


def concatenate_cluster(slice_: ConceptSlice, cluster: Cluster) -> str:
    """Join a cluster's member sentences in corpus order.

    Sentences that lack terminal punctuation get a ``.`` appended, so the
    boundaries survive later sentence splitting.
    """
    if cluster.concept != slice_.concept:
        raise AlignmentError(
            f"cluster belongs to {cluster.concept!r}, slice to {slice_.concept!r}"
        )
    if not cluster.member_rows:
        raise EmptyClusterError(f"cluster {cluster.index} of {cluster.concept!r} has no members")
    records = slice_.corpus.records
    return " ".join(_normalize_sentence(records[row].text) for row in cluster.member_rows)


def _truncate_to_cap(text: str, cap_words: int) -> str:
    """Cut at the last sentence boundary under the cap; word-level if the
    first sentence alone exceeds it."""
    kept: list[str] = []
    total = 0
    for sentence in split_sentences(text):
        n = len(tokenize_words(sentence))
        if total + n > cap_words:
            break
        kept.append(sentence)
        total += n
    if kept:
        return " ".join(kept)
    chunks: list[str] = []
    total = 0
    for chunk in text.split():
        n = len(tokenize_words(chunk))
        if total + n > cap_words and chunks:
            break
        chunks.append(chunk)
        total += n
    return " ".join(chunks)


def summarize(backend: Summarizer, text: str, params: SummaryParams) -> str:
    """Summarise ``text`` through ``backend``, enforcing the length contract.

    Input shorter than ``min_words`` is returned unchanged. Backend output
    longer than twice ``max_words`` is truncated at a sentence boundary.
    """
    words = tokenize_words(text)
    if not words:
        raise EmptyInputError("summarize: text has no word tokens")
    if len(words) < params.min_words:
        return text
    summary = backend.summarize(text, params)
    if not summary or not tokenize_words(summary):
        raise EmptyInputError(f"summarizer {backend.name} returned an empty summary")
    cap = 2 * params.max_words
    if len(tokenize_words(summary)) > cap:
        summary = _truncate_to_cap(summary, cap)
    return summary


def extractive_fallback_summarize(
    cluster: Cluster,
    matrix: EmbeddingMatrix,
    params: SummaryParams,
) -> str:
    """Model-free summary: member sentences closest to the cluster centroid.

    Ranking is by cosine similarity, ties keep corpus order. Sentences are
    appended greedily until the next one would push the total past
    ``max_words``; the top-ranked sentence is always included even when it
    exceeds the budget on its own. The output is re-ordered to corpus order,
    so every summary sentence appears verbatim in the original text.
    """
    if not cluster.member_rows:
        raise EmptyClusterError(f"cluster {cluster.index} of {cluster.concept!r} has no members")
    position = {row: i for i, row in enumerate(matrix.row_refs)}
    try:
        member_positions = [position[row] for row in cluster.member_rows]
    except KeyError as exc:
        raise AlignmentError(f"cluster row {exc} is not in the matrix") from exc

    records = matrix.slice.corpus.records
    sentences = [records[row].text for row in cluster.member_rows]
    vectors = matrix.rows[member_positions]

    if float(np.linalg.norm(cluster.centroid)) == 0.0:
        scores = [0.0] * len(sentences)
    else:
        scores = [cosine(vec, cluster.centroid) for vec in vectors]

    # member_rows are ascending, so the index doubles as corpus-order tie-break
    ranked = sorted(range(len(sentences)), key=lambda i: (-scores[i], i))
    chosen = [ranked[0]]
    budget = len(tokenize_words(sentences[ranked[0]]))
    for i in ranked[1:]:
        n = len(tokenize_words(sentences[i]))
        if budget + n > params.max_words:
            break
        chosen.append(i)
        budget += n

    chosen.sort()
    return " ".join(_normalize_sentence(sentences[i]) for i in chosen)


def _candidate_phrases(tokens: list[str], max_ngram: int) -> list[str]:
    runs: list[list[str]] = []
    current: list[str] = []
    for token in tokens:
        if token in STOPWORDS:
            if current:
                runs.append(current)
                current = []
        else:
            current.append(token)
    if current:
        runs.append(current)

    seen: dict[str, None] = {}
    for run in runs:
        for n in range(1, max_ngram + 1):
            for i in range(len(run) - n + 1):
                seen.setdefault(" ".join(run[i : i + n]), None)
    return list(seen)


def _title_case(phrase: str) -> str:
    return " ".join(word.capitalize() for word in phrase.split())


def generate_heading(
    text: str,
    backend: EmbeddingBackend,
    *,
    max_ngram: int = 3,
    top_n: int = 1,
    mmr_lambda: float = 0.5,
) -> str:
    """Pick the short phrase most similar to the whole text.

    Candidates are 1..max_ngram grams over stopword-free token runs, scored
    by cosine to the document embedding; when ``top_n`` > 1 the rest are
    picked by maximal marginal relevance. All-stopword text falls back to
    the first five words. Headings are title-cased and at most eight words.
    """
    tokens = tokenize_words(text)
    if not tokens:
        raise EmptyInputError("generate_heading: text has no word tokens")
    candidates = _candidate_phrases(tokens, max_ngram)
    if not candidates:
        return _title_case(" ".join(tokens[:_FALLBACK_HEADING_WORDS]))

    vectors = embed_batch(backend, [text] + candidates)
    doc = vectors[0]
    cand = vectors[1:]
    relevances = [cosine(vec, doc) for vec in cand]

    selected = [int(np.argmax(relevances))]
    while len(selected) < min(top_n, len(candidates)):
        best_idx, best_score = -1, -np.inf
        for i in range(len(candidates)):
            if i in selected:
                continue
            redundancy = max(cosine(cand[i], cand[j]) for j in selected)
            score = mmr_lambda * relevances[i] - (1.0 - mmr_lambda) * redundancy
            if score > best_score:
                best_idx, best_score = i, score
        selected.append(best_idx)

    heading = _title_case(", ".join(candidates[i] for i in selected))
    words = heading.split()
    if len(words) > HEADING_MAX_WORDS:
        heading = " ".join(words[:HEADING_MAX_WORDS])
    return heading


def assemble_summary_artifact(
    cluster: Cluster,
    heading: str,
    summary: str,
    model: str,
    metrics: MetricsRecord | None = None,
) -> SummaryArtifact:
    """Bundle one cluster's outputs; source_ids echo the cluster members."""
    if not cluster.member_ids:
        raise EmptyClusterError(f"cluster {cluster.index} of {cluster.concept!r} has no members")
    if not summary.strip():
        raise EmptyInputError("artifact needs a non-empty summary")
    return SummaryArtifact(
        concept=cluster.concept,
        cluster_index=cluster.index,
        heading=heading,
        summary=summary,
        source_ids=cluster.member_ids,
        model=model,
        metrics=metrics,
    )
