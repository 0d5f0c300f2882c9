"""End-to-end orchestration: slice, embed, cluster, summarise, evaluate, emit.

For every selected concept the pipeline slices the corpus, embeds the
sentences, picks k by the elbow rule (skipped for tiny concepts), clusters,
and turns each cluster into a heading + summary + metrics artifact per
configured model. Failures of a single cluster/model pair are recorded and
skipped; they never abort the batch.

Everything is deterministic for a fixed (config, corpus): per-concept seeds
are derived by hashing the concept name into the run seed, worker results
are merged in a canonical order, and the run id is a content hash rather
than a timestamp. Running twice, or with a different worker count, emits
byte-identical delimited output.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

from .analytics import metrics_by_group, table_to_csv
from .clustering import (
    EmbeddingMatrix,
    KSelection,
    _elbow_search,
    build_clusters,
    default_k_range,
    kmeans,
)
from .corpus import (
    Corpus,
    ReportMeta,
    concept_sort_key,
    load_corpus_csv,
    serialize_corpus_csv,
    slice_by_concept,
)
from .embedding import (
    DEFAULT_DIM,
    EmbeddingBackend,
    create_embedding_backend,
    embed_batch,
    stable_hash64,
)
from .errors import AlignmentError, EmptyInputError, InvalidSpecError
from .metrics import METRIC_NAMES, evaluate_summary
from .summarise import (
    ExtractiveSummarizer,
    Summarizer,
    SummaryArtifact,
    SummaryParams,
    assemble_summary_artifact,
    concatenate_cluster,
    create_summarizer,
    extractive_fallback_summarize,
    generate_heading,
    summarize,
)

logger = logging.getLogger(__name__)

TOOL_NAME = "clustersum"
_MASK64 = (1 << 64) - 1

SUMMARY_COLUMNS = (
    "run_id", "model", "concept", "cluster_index", "heading", "summary",
    "source_file_ids", "source_sentence_ids", "n_sources",
    *METRIC_NAMES,
)

SUMMARIES_FILE = "summaries.csv"
BY_MODEL_FILE = "metrics_by_model.csv"
BY_CONCEPT_FILE = "metrics_by_concept.csv"
EQUITY_FILE = "equity.csv"
MANIFEST_FILE = "manifest.json"

# Config fields that change how work is scheduled or where files land, but
# not what the artifacts contain. They stay out of the run id hash.
_NON_CONTENT_FIELDS = ("input_path", "output_dir", "workers")


def _tool_version() -> str:
    try:
        from importlib.metadata import version

        return version(TOOL_NAME)
    except Exception:  # not installed, e.g. running from a checkout
        return "0+unknown"


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; JSON-loadable, unknown keys rejected."""

    input_path: str = ""
    output_dir: str = "out"
    embedding_backend: str = "stub"
    summarizer_backend: str = "extractive"
    models: tuple[str, ...] = ("extractive",)
    seed: int = 0
    k_min: int = 1
    k_max: int = 10
    elbow_floor: int = 3
    concepts: tuple[str, ...] | None = None
    summary_params: SummaryParams = SummaryParams()
    workers: int = 1
    strict_taxonomy: bool = False
    embedding_dim: int = DEFAULT_DIM

    def validate(self) -> None:
        if not self.models or any(not m for m in self.models):
            raise InvalidSpecError("config needs at least one non-empty model name")
        if self.workers < 1:
            raise InvalidSpecError(f"workers must be >= 1, got {self.workers}")
        if not 1 <= self.k_min <= self.k_max:
            raise InvalidSpecError(f"need 1 <= k_min <= k_max, got [{self.k_min}, {self.k_max}]")
        if self.elbow_floor < 1:
            raise InvalidSpecError(f"elbow_floor must be >= 1, got {self.elbow_floor}")
        if self.embedding_dim < 2:
            raise InvalidSpecError(f"embedding_dim must be >= 2, got {self.embedding_dim}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise InvalidSpecError(f"seed must be an integer, got {self.seed!r}")

    @classmethod
    def from_dict(cls, data: Mapping) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidSpecError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        kwargs = dict(data)
        if "models" in kwargs:
            kwargs["models"] = tuple(kwargs["models"])
        if kwargs.get("concepts") is not None:
            kwargs["concepts"] = tuple(kwargs["concepts"])
        if "summary_params" in kwargs:
            params = kwargs["summary_params"]
            if isinstance(params, Mapping):
                extra = set(params) - {"min_words", "max_words", "model"}
                if extra:
                    raise InvalidSpecError(f"unknown summary_params key(s): {', '.join(sorted(extra))}")
                kwargs["summary_params"] = SummaryParams(**params)
        config = cls(**kwargs)
        config.validate()
        return config

    @classmethod
    def from_json_file(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidSpecError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, Mapping):
            raise InvalidSpecError(f"config {path} must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["models"] = list(self.models)
        data["concepts"] = list(self.concepts) if self.concepts is not None else None
        data["summary_params"] = {
            "min_words": self.summary_params.min_words,
            "max_words": self.summary_params.max_words,
        }
        return data


@dataclass(frozen=True)
class SkippedCluster:
    """A cluster/model pair that produced no artifact, with its members kept
    so traceability still closes."""

    concept: str
    cluster_index: int
    model: str
    reason: str
    source_ids: tuple[tuple[str, str], ...] = ()


@dataclass
class RunResult:
    run_id: str
    config: RunConfig
    artifacts: list[SummaryArtifact]
    k_selections: dict[str, KSelection]
    skipped: list[SkippedCluster]
    manifest: dict
    meta: dict[str, ReportMeta] = field(default_factory=dict)


def corpus_digest(corpus: Corpus) -> str:
    return hashlib.sha256(serialize_corpus_csv(corpus).encode("utf-8")).hexdigest()[:16]


def _run_id(config: RunConfig, digest: str) -> str:
    content = {k: v for k, v in config.to_dict().items() if k not in _NON_CONTENT_FIELDS}
    blob = json.dumps(content, sort_keys=True) + digest
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def _utc_stamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


@dataclass
class _ConceptOutput:
    concept: str
    size: int
    selection: KSelection | None
    artifacts: list[SummaryArtifact]
    skipped: list[SkippedCluster]


def _process_concept(
    concept: str,
    corpus: Corpus,
    config: RunConfig,
    models: tuple[str, ...],
    embedder: EmbeddingBackend,
    summarizer: Summarizer,
) -> _ConceptOutput:
    slice_ = slice_by_concept(corpus, concept)
    if not slice_.rows:
        return _ConceptOutput(concept, 0, None, [], [])

    vectors = embed_batch(embedder, slice_.texts())
    matrix = EmbeddingMatrix(vectors, slice_)
    n = len(slice_.rows)
    seed = (config.seed ^ stable_hash64(concept)) & _MASK64

    if n < config.elbow_floor:
        result = kmeans(matrix, 1, seed=seed)
        selection = KSelection(1, {1: result.inertia}, "small-concept-floor")
    else:
        _, hi = default_k_range(n, config.k_max)
        lo = min(max(config.k_min, 1), hi)
        selection, result = _elbow_search(matrix, lo, hi, seed=seed)

    cluster_set = build_clusters(slice_, matrix, result)
    artifacts: list[SummaryArtifact] = []
    skipped: list[SkippedCluster] = []
    extractive = isinstance(summarizer, ExtractiveSummarizer)

    for cluster in cluster_set.clusters:
        text = concatenate_cluster(slice_, cluster)
        try:
            heading = generate_heading(text, embedder)
        except Exception as exc:  # heading failure loses the cluster for every model
            reason = f"heading failed: {type(exc).__name__}: {exc}"
            skipped.extend(
                SkippedCluster(concept, cluster.index, m, reason, cluster.member_ids)
                for m in models
            )
            continue
        for model in models:
            params = replace(config.summary_params, model=model)
            try:
                if extractive:
                    summary = extractive_fallback_summarize(cluster, matrix, params)
                else:
                    summary = summarize(summarizer, text, params)
                record = evaluate_summary(text, summary, embedder)
                artifacts.append(assemble_summary_artifact(cluster, heading, summary, model, record))
            except Exception as exc:
                logger.warning(
                    "skipping %s/%s under model %s: %s", concept, cluster.index, model, exc
                )
                skipped.append(
                    SkippedCluster(
                        concept, cluster.index, model,
                        f"{type(exc).__name__}: {exc}", cluster.member_ids,
                    )
                )

    return _ConceptOutput(concept, n, selection, artifacts, skipped)


def _check_traceability(
    corpus: Corpus,
    concepts: list[str],
    models: tuple[str, ...],
    artifacts: list[SummaryArtifact],
    skipped: list[SkippedCluster],
) -> None:
    """Per concept and model, artifact sources (plus skipped clusters) must
    partition the concept slice exactly."""
    slice_ids = {c: set(slice_by_concept(corpus, c).ids()) for c in concepts}
    for model in models:
        for concept in concepts:
            expected = slice_ids[concept]
            covered: list[tuple[str, str]] = []
            for artifact in artifacts:
                if artifact.model == model and artifact.concept == concept:
                    covered.extend(artifact.source_ids)
            for skip in skipped:
                if skip.model == model and skip.concept == concept:
                    covered.extend(skip.source_ids)
            if len(covered) != len(set(covered)):
                raise AlignmentError(
                    f"{concept!r}/{model!r}: clusters overlap; traceability is broken"
                )
            if set(covered) != expected:
                missing = len(expected) - len(set(covered) & expected)
                raise AlignmentError(
                    f"{concept!r}/{model!r}: {missing} slice sentence(s) not covered by any cluster"
                )


def run_pipeline(
    config: RunConfig,
    corpus: Corpus | None = None,
    *,
    embedding_backend: EmbeddingBackend | None = None,
    summarizer: Summarizer | None = None,
) -> RunResult:
    """Execute the full batch and return artifacts plus the run manifest.

    Backends not passed in are built from the config selectors and closed
    before returning.
    """
    config.validate()
    started = _utc_stamp()

    if corpus is None:
        if not config.input_path:
            raise InvalidSpecError("config.input_path is empty and no corpus was passed")
        corpus = load_corpus_csv(config.input_path, strict_taxonomy=config.strict_taxonomy)
    if not corpus.records:
        raise EmptyInputError("corpus has no records")

    own_embedder = embedding_backend is None
    if embedding_backend is None:
        embedding_backend = create_embedding_backend(
            config.embedding_backend, dim=config.embedding_dim, seed=config.seed
        )
    own_summarizer = summarizer is None
    if summarizer is None:
        summarizer = create_summarizer(config.summarizer_backend)

    try:
        return _run(config, corpus, embedding_backend, summarizer, started)
    finally:
        if own_embedder:
            embedding_backend.close()
        if own_summarizer:
            summarizer.close()


def _run(
    config: RunConfig,
    corpus: Corpus,
    embedder: EmbeddingBackend,
    summarizer: Summarizer,
    started: str,
) -> RunResult:
    present = corpus.concepts()
    if config.concepts is not None:
        selected = [c for c in dict.fromkeys(config.concepts)]
    else:
        selected = present
    selected = sorted(selected, key=concept_sort_key)
    models = tuple(sorted(dict.fromkeys(config.models)))

    outputs: dict[str, _ConceptOutput] = {}
    if config.workers == 1 or len(selected) <= 1:
        for concept in selected:
            outputs[concept] = _process_concept(concept, corpus, config, models, embedder, summarizer)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = {
                pool.submit(_process_concept, concept, corpus, config, models, embedder, summarizer): concept
                for concept in selected
            }
            for future in concurrent.futures.as_completed(futures):
                outputs[futures[future]] = future.result()

    artifacts: list[SummaryArtifact] = []
    skipped: list[SkippedCluster] = []
    selections: dict[str, KSelection] = {}
    sizes: dict[str, int] = {}
    for concept in selected:
        out = outputs[concept]
        artifacts.extend(out.artifacts)
        skipped.extend(out.skipped)
        sizes[concept] = out.size
        if out.selection is not None:
            selections[concept] = out.selection

    artifacts.sort(key=lambda a: (a.model, concept_sort_key(a.concept), a.cluster_index))
    skipped.sort(key=lambda s: (s.model, concept_sort_key(s.concept), s.cluster_index))

    populated = [c for c in selected if sizes[c] > 0]
    _check_traceability(corpus, populated, models, artifacts, skipped)

    digest = corpus_digest(corpus)
    run_id = _run_id(config, digest)
    has_groups = corpus.has_group_metadata()
    if not has_groups:
        equity_note = "omitted: corpus has no group metadata"
    elif not artifacts:
        equity_note = "omitted: run produced no artifacts"
    else:
        equity_note = "emitted"
    manifest = {
        "run_id": run_id,
        "tool": {"name": TOOL_NAME, "version": _tool_version()},
        "config": config.to_dict(),
        "backends": {
            "embedding": {"name": embedder.info.name, "dim": embedder.info.dim},
            "summarizer": summarizer.name,
        },
        "corpus": {
            "digest": digest,
            "sentences": len(corpus.records),
            "files": len({r.file_id for r in corpus.records}),
            "concept_sentence_counts": sizes,
        },
        "k_selections": {
            concept: {
                "chosen_k": sel.chosen_k,
                "method": sel.method,
                "inertias": {str(k): sel.candidate_inertias[k] for k in sorted(sel.candidate_inertias)},
            }
            for concept, sel in selections.items()
        },
        "skipped": [asdict(s) for s in skipped],
        "equity": equity_note,
        "traceability": "ok",
        "timestamps": {"started": started, "finished": _utc_stamp()},
    }

    return RunResult(
        run_id=run_id,
        config=config,
        artifacts=artifacts,
        k_selections=selections,
        skipped=skipped,
        manifest=manifest,
        meta=dict(corpus.meta),
    )


def _summaries_csv(result: RunResult) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for a in result.artifacts:
        assert a.metrics is not None  # run_pipeline always evaluates
        writer.writerow(
            [
                result.run_id,
                a.model,
                a.concept,
                a.cluster_index,
                a.heading,
                a.summary,
                "|".join(fid for fid, _ in a.source_ids),
                "|".join(sid for _, sid in a.source_ids),
                len(a.source_ids),
            ]
            + [f"{getattr(a.metrics, name):.6f}" for name in METRIC_NAMES]
        )
    return out.getvalue()


def emit_outputs(result: RunResult, out_dir: str | Path | None = None) -> list[Path]:
    """Write the delimited outputs and manifest; returns the paths written.

    Emission is pure serialization of the result, so re-emitting the same
    result produces byte-identical files. equity.csv appears only when the
    corpus carried group metadata.
    """
    target = Path(out_dir if out_dir is not None else result.config.output_dir)
    target.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def write(name: str, content: str) -> None:
        path = target / name
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(content)
        written.append(path)

    write(SUMMARIES_FILE, _summaries_csv(result))
    if result.artifacts:
        write(BY_MODEL_FILE, table_to_csv(metrics_by_group(result.artifacts, "model")))
        write(BY_CONCEPT_FILE, table_to_csv(metrics_by_group(result.artifacts, "concept")))
        groups = {m.group for m in result.meta.values() if m.group}
        if groups:
            write(
                EQUITY_FILE,
                table_to_csv(
                    metrics_by_group(result.artifacts, "file-group", result.meta, extra_groups=groups)
                ),
            )
    write(MANIFEST_FILE, json.dumps(result.manifest, indent=2, sort_keys=True) + "\n")
    return written
