"""Cluster concatenation, both summary routes, headings, artifacts."""

import numpy as np
import pytest

from clustersum.clustering import Cluster, EmbeddingMatrix, build_clusters, kmeans
from clustersum.corpus import slice_by_concept
from clustersum.embedding import embed_batch
from clustersum.errors import (
    AlignmentError,
    EmptyClusterError,
    EmptyInputError,
    InvalidSpecError,
)
from clustersum.summarise import (
    STOPWORDS,
    ExtractiveSummarizer,
    SummaryParams,
    assemble_summary_artifact,
    concatenate_cluster,
    create_summarizer,
    extractive_fallback_summarize,
    generate_heading,
    summarize,
)
from clustersum.metrics import tokenize_words

from conftest import make_corpus


def monitoring_slice(texts):
    rows = [(f"f{i}", f"s{i}", text, "Monitoring") for i, text in enumerate(texts)]
    return slice_by_concept(make_corpus(rows), "Monitoring")


def hand_cluster(slice_, member_positions, centroid):
    rows = tuple(slice_.rows[p] for p in member_positions)
    records = slice_.corpus.records
    ids = tuple(records[r].key for r in rows)
    return Cluster("Monitoring", 0, rows, ids, np.asarray(centroid, dtype=float))


class FakeSummarizer:
    name = "fake"

    def __init__(self, reply):
        self.reply = reply
        self.calls = 0

    def summarize(self, text, params):
        self.calls += 1
        return self.reply

    def close(self):
        pass


class TestSummaryParams:
    def test_defaults(self):
        params = SummaryParams()
        assert (params.min_words, params.max_words, params.model) == (20, 60, "")

    @pytest.mark.parametrize("lo,hi", [(0, 5), (10, 5), (-1, 3)])
    def test_invalid(self, lo, hi):
        with pytest.raises(InvalidSpecError):
            SummaryParams(min_words=lo, max_words=hi)


class TestCreateSummarizer:
    def test_extractive(self):
        backend = create_summarizer("extractive")
        assert isinstance(backend, ExtractiveSummarizer)
        assert backend.name == "extractive"
        with pytest.raises(NotImplementedError):
            backend.summarize("text", SummaryParams())

    def test_bad_selectors(self):
        with pytest.raises(ValueError):
            create_summarizer("gpt-best")
        with pytest.raises(ValueError):
            create_summarizer("sidecar:   ")


class TestConcatenate:
    def test_corpus_order_and_punctuation(self):
        slice_ = monitoring_slice(["First point", "Second point!", "Third point"])
        cluster = hand_cluster(slice_, [0, 2], np.zeros(2))
        assert concatenate_cluster(slice_, cluster) == "First point. Third point."
        full = hand_cluster(slice_, [0, 1, 2], np.zeros(2))
        assert concatenate_cluster(slice_, full) == "First point. Second point! Third point."

    def test_concept_mismatch(self):
        slice_ = monitoring_slice(["A sentence."])
        other = Cluster("Acuity", 0, (0,), (("f0", "s0"),), np.zeros(2))
        with pytest.raises(AlignmentError):
            concatenate_cluster(slice_, other)

    def test_empty_cluster(self):
        slice_ = monitoring_slice(["A sentence."])
        empty = Cluster("Monitoring", 0, (), (), np.zeros(2))
        with pytest.raises(EmptyClusterError):
            concatenate_cluster(slice_, empty)


class TestSummarize:
    def test_short_input_bypasses_backend(self):
        backend = FakeSummarizer("should not appear")
        text = "only four words here"
        assert summarize(backend, text, SummaryParams(min_words=10, max_words=20)) == text
        assert backend.calls == 0

    def test_backend_output_passes_through(self):
        backend = FakeSummarizer("A compact account of events.")
        text = " ".join(["word"] * 30)
        out = summarize(backend, text, SummaryParams(min_words=10, max_words=20))
        assert out == "A compact account of events."
        assert backend.calls == 1

    def test_empty_text_raises(self):
        with pytest.raises(EmptyInputError):
            summarize(FakeSummarizer("x"), "  ", SummaryParams())

    @pytest.mark.parametrize("reply", ["", "   ", "..."])
    def test_empty_backend_output_raises(self, reply):
        backend = FakeSummarizer(reply)
        with pytest.raises(EmptyInputError):
            summarize(backend, " ".join(["word"] * 30), SummaryParams(min_words=5, max_words=10))

    def test_overlong_output_truncated_at_sentence_boundary(self):
        reply = "one two three four five six. seven eight nine ten eleven. twelve."
        backend = FakeSummarizer(reply)
        out = summarize(backend, " ".join(["word"] * 30), SummaryParams(min_words=1, max_words=5))
        assert out == "one two three four five six."
        assert len(tokenize_words(out)) <= 10

    def test_single_runaway_sentence_cut_at_word_level(self):
        reply = " ".join(f"w{i}" for i in range(30))
        backend = FakeSummarizer(reply)
        out = summarize(backend, " ".join(["word"] * 30), SummaryParams(min_words=1, max_words=5))
        assert out == " ".join(f"w{i}" for i in range(10))


class TestExtractive:
    def test_known_ranking_and_budget(self):
        slice_ = monitoring_slice(["alpha beta gamma", "delta epsilon", "zeta"])
        matrix = EmbeddingMatrix(np.eye(3), slice_)
        cluster = hand_cluster(slice_, [0, 1, 2], [0.0, 0.0, 1.0])
        # centroid equals row 2's embedding: rank [2, 0, 1]; 4-word budget
        # takes "zeta" then "alpha beta gamma", rejects "delta epsilon"
        out = extractive_fallback_summarize(cluster, matrix, SummaryParams(min_words=1, max_words=4))
        assert out == "alpha beta gamma. zeta."

    def test_top_sentence_always_included(self):
        slice_ = monitoring_slice(["one two three four five", "six"])
        matrix = EmbeddingMatrix(np.eye(2), slice_)
        cluster = hand_cluster(slice_, [0, 1], [1.0, 0.0])
        out = extractive_fallback_summarize(cluster, matrix, SummaryParams(min_words=1, max_words=2))
        assert out == "one two three four five."

    def test_zero_norm_centroid_keeps_corpus_order(self):
        slice_ = monitoring_slice(["first one", "second one", "third one"])
        matrix = EmbeddingMatrix(np.eye(3), slice_)
        cluster = hand_cluster(slice_, [0, 1, 2], [0.0, 0.0, 0.0])
        out = extractive_fallback_summarize(cluster, matrix, SummaryParams(min_words=1, max_words=4))
        assert out == "first one. second one."

    def test_verbatim_from_real_clusters(self, stub_backend):
        texts = [
            f"The {w} issue was {v} by the team on shift."
            for w in ("monitoring", "handover", "escalation", "staffing", "triage")
            for v in ("noted", "missed", "raised", "reviewed")
        ]
        slice_ = monitoring_slice(texts)
        matrix = EmbeddingMatrix(embed_batch(stub_backend, list(texts)), slice_)
        result = kmeans(matrix, 4, seed=0)
        originals = {t.rstrip(".!?") for t in texts}
        for cluster in build_clusters(slice_, matrix, result).clusters:
            summary = extractive_fallback_summarize(cluster, matrix, SummaryParams())
            for sentence in summary.split(". "):
                assert sentence.rstrip(".!?") in originals

    def test_row_not_in_matrix(self):
        slice_ = monitoring_slice(["a b", "c d"])
        matrix = EmbeddingMatrix(np.eye(2), slice_)
        bad = Cluster("Monitoring", 0, (0, 99), (("f0", "s0"), ("x", "y")), np.zeros(2))
        with pytest.raises(AlignmentError):
            extractive_fallback_summarize(bad, matrix, SummaryParams())

    def test_empty_cluster(self):
        slice_ = monitoring_slice(["a b"])
        matrix = EmbeddingMatrix(np.eye(1), slice_)
        empty = Cluster("Monitoring", 0, (), (), np.zeros(1))
        with pytest.raises(EmptyClusterError):
            extractive_fallback_summarize(empty, matrix, SummaryParams())


class TestHeading:
    TEXT = (
        "Fetal monitoring was delayed. Fetal monitoring was not escalated. "
        "The fetal monitoring plan was unclear."
    )

    def test_dominant_phrase_wins(self, stub_backend):
        heading = generate_heading(self.TEXT, stub_backend)
        assert heading.startswith("Fetal Monitoring")

    def test_shape_rules(self, stub_backend):
        heading = generate_heading(self.TEXT, stub_backend)
        words = heading.split()
        assert 1 <= len(words) <= 8
        assert all(w[0].isupper() for w in words)
        assert all(w.lower() not in STOPWORDS for w in words)
        assert set(w.lower() for w in words) <= set(tokenize_words(self.TEXT))

    def test_deterministic(self, stub_backend):
        assert generate_heading(self.TEXT, stub_backend) == generate_heading(self.TEXT, stub_backend)

    def test_unigram_only(self, stub_backend):
        heading = generate_heading(self.TEXT, stub_backend, max_ngram=1)
        assert len(heading.split()) == 1

    def test_mmr_adds_distinct_phrase(self, stub_backend):
        single = generate_heading(self.TEXT, stub_backend)
        double = generate_heading(self.TEXT, stub_backend, top_n=2)
        assert double.startswith(single)
        assert ", " in double
        assert len(double.split()) <= 8

    def test_all_stopwords_falls_back(self, stub_backend):
        heading = generate_heading("the was were of and then so", stub_backend)
        assert heading == "The Was Were Of And"

    def test_empty_raises(self, stub_backend):
        with pytest.raises(EmptyInputError):
            generate_heading("  ", stub_backend)


class TestArtifact:
    def test_bundles_fields(self):
        slice_ = monitoring_slice(["a b c"])
        cluster = hand_cluster(slice_, [0], np.zeros(2))
        artifact = assemble_summary_artifact(cluster, "Heading", "a b c.", "extractive")
        assert artifact.concept == "Monitoring"
        assert artifact.cluster_index == 0
        assert artifact.source_ids == cluster.member_ids
        assert artifact.model == "extractive"
        assert artifact.metrics is None

    def test_empty_summary_rejected(self):
        slice_ = monitoring_slice(["a b c"])
        cluster = hand_cluster(slice_, [0], np.zeros(2))
        with pytest.raises(EmptyInputError):
            assemble_summary_artifact(cluster, "H", "  ", "extractive")

    def test_empty_cluster_rejected(self):
        empty = Cluster("Monitoring", 0, (), (), np.zeros(2))
        with pytest.raises(EmptyClusterError):
            assemble_summary_artifact(empty, "H", "text.", "extractive")
