"""Concept-wise clustering and summarisation of annotated sentence corpora.

The package slices a concept-annotated corpus, clusters each concept's
sentences over embeddings (k picked by the elbow rule), summarises every
cluster with full sentence-level traceability, scores the summaries on six
quality metrics, and aggregates the scores by model, concept, or
demographic group.
"""

from .analytics import AggregateStat, MetricTable, aggregate, equity_report, metrics_by_group
from .clustering import (
    Cluster,
    ClusterSet,
    EmbeddingMatrix,
    KMeansResult,
    KSelection,
    build_clusters,
    kmeans,
    select_k_elbow,
)
from .corpus import (
    Corpus,
    ConceptSlice,
    ReportMeta,
    SentenceRecord,
    SyntheticSpec,
    bundled_synthetic_corpus,
    generate_synthetic_corpus,
    load_corpus_csv,
    load_taxonomy,
    parse_corpus_csv,
    serialize_corpus_csv,
    slice_by_concept,
    validate_corpus,
)
from .embedding import (
    BackendInfo,
    StubEmbeddingBackend,
    cosine,
    create_embedding_backend,
    document_embedding,
    embed_batch,
    stub_embed,
)
from .errors import ClusterSumError
from .metrics import (
    METRIC_NAMES,
    MetricsRecord,
    coherence,
    conciseness,
    coverage,
    diversity,
    evaluate_summary,
    readability,
    relevance,
)
from .pipeline import RunConfig, RunResult, emit_outputs, run_pipeline
from .summarise import (
    SummaryArtifact,
    SummaryParams,
    concatenate_cluster,
    extractive_fallback_summarize,
    generate_heading,
    summarize,
)

try:
    from importlib.metadata import version as _version

    __version__ = _version("clustersum")
except Exception:  # running from a checkout without installation
    __version__ = "0+unknown"

__all__ = [
    "AggregateStat",
    "BackendInfo",
    "Cluster",
    "ClusterSet",
    "ClusterSumError",
    "ConceptSlice",
    "Corpus",
    "EmbeddingMatrix",
    "KMeansResult",
    "KSelection",
    "METRIC_NAMES",
    "MetricTable",
    "MetricsRecord",
    "ReportMeta",
    "RunConfig",
    "RunResult",
    "SentenceRecord",
    "StubEmbeddingBackend",
    "SummaryArtifact",
    "SummaryParams",
    "SyntheticSpec",
    "aggregate",
    "build_clusters",
    "bundled_synthetic_corpus",
    "coherence",
    "conciseness",
    "concatenate_cluster",
    "cosine",
    "coverage",
    "create_embedding_backend",
    "diversity",
    "document_embedding",
    "embed_batch",
    "emit_outputs",
    "equity_report",
    "evaluate_summary",
    "extractive_fallback_summarize",
    "generate_heading",
    "generate_synthetic_corpus",
    "kmeans",
    "load_corpus_csv",
    "load_taxonomy",
    "metrics_by_group",
    "parse_corpus_csv",
    "readability",
    "relevance",
    "run_pipeline",
    "select_k_elbow",
    "serialize_corpus_csv",
    "slice_by_concept",
    "stub_embed",
    "summarize",
    "validate_corpus",
]
