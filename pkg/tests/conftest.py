import pytest

from clustersum.corpus import Corpus, ReportMeta, SentenceRecord, bundled_synthetic_corpus
from clustersum.embedding import StubEmbeddingBackend


def make_corpus(rows, meta=None) -> Corpus:
    """Build a corpus from (file_id, sentence_id, text, concepts) tuples.

    ``concepts`` may be a string (single concept) or an iterable. ``meta``
    maps file_id -> (year, group).
    """
    records = []
    for file_id, sentence_id, text, concepts in rows:
        if isinstance(concepts, str):
            concepts = (concepts,)
        records.append(SentenceRecord(file_id, sentence_id, text, tuple(concepts)))
    meta_table = {}
    for file_id, (year, group) in (meta or {}).items():
        meta_table[file_id] = ReportMeta(file_id, year, group)
    return Corpus(tuple(records), meta_table)


@pytest.fixture(scope="session")
def stub_backend():
    # A modest dim keeps the suite fast; behaviour does not depend on width.
    return StubEmbeddingBackend(dim=64, seed=0)


@pytest.fixture(scope="session")
def bundled_corpus():
    return bundled_synthetic_corpus()
