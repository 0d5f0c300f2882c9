"""Corpus ingestion, validation, slicing, and synthetic corpus generation.

A corpus is an ordered collection of concept-annotated sentences. Each
sentence carries a (file_id, sentence_id) provenance pair and one or more
concept labels; per-file metadata (year, demographic group) rides along in
a side table keyed by file_id.

CSV schema (UTF-8, header required, BOM tolerated):

    file_id, sentence_id, text, concepts [, year, group]

``concepts`` is a ``;``-separated list. The separator is ``;`` rather than
``,`` because several taxonomy concept names contain commas (for example
"Assessment, investigation, testing, screening").
"""

from __future__ import annotations

import csv
import io
import random
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import (
    DuplicateSentenceIdError,
    EmptyTextError,
    InvalidSpecError,
    MalformedCsvError,
    UnknownConceptError,
)
from .metrics import tokenize_words

CONCEPT_SEPARATOR = ";"
REQUIRED_COLUMNS = ("file_id", "sentence_id", "text", "concepts")
OPTIONAL_COLUMNS = ("year", "group")
MIN_YEAR, MAX_YEAR = 1900, 2100

# Demographic group labels recognised by the equity preset, in report order.
RECOGNIZED_GROUPS = ("Asian", "Black", "DNR", "MB", "OW", "WB")

# Spec and seed used to produce the corpus bundled with the package.
BUNDLED_SEED = 42


def load_taxonomy(path: str | Path | None = None) -> tuple[str, ...]:
    """Load the concept taxonomy, one concept name per line, in ID order.

    With no path, returns the built-in 27-concept human-factors taxonomy
    for incident reports.
    """
    if path is None:
        return _builtin_taxonomy()
    lines = Path(path).read_text(encoding="utf-8-sig").splitlines()
    names = tuple(line.strip() for line in lines if line.strip())
    if not names:
        raise MalformedCsvError(f"taxonomy file {path} contains no concept names")
    return names


@lru_cache(maxsize=1)
def _builtin_taxonomy() -> tuple[str, ...]:
    text = resources.files("clustersum.data").joinpath("concepts.txt").read_text("utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


def concept_sort_key(concept: str, taxonomy: tuple[str, ...] | None = None) -> tuple[int, str]:
    """Canonical ordering: taxonomy ID order first, unknown concepts after, alphabetical."""
    taxonomy = taxonomy or _builtin_taxonomy()
    try:
        return (taxonomy.index(concept), concept)
    except ValueError:
        return (len(taxonomy), concept)


@dataclass(frozen=True)
class ReportMeta:
    """Optional per-file metadata: publication year and demographic group."""

    file_id: str
    year: int | None = None
    group: str | None = None


@dataclass(frozen=True)
class SentenceRecord:
    """One annotated sentence. ``concepts`` is a deduplicated, order-preserving tuple."""

    file_id: str
    sentence_id: str
    text: str
    concepts: tuple[str, ...]

    @property
    def key(self) -> tuple[str, str]:
        return (self.file_id, self.sentence_id)


@dataclass(frozen=True, eq=False)
class Corpus:
    records: tuple[SentenceRecord, ...]
    meta: dict[str, ReportMeta] = field(default_factory=dict)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return self.records == other.records and self.meta == other.meta

    def __len__(self) -> int:
        return len(self.records)

    def concepts(self) -> list[str]:
        """Distinct concepts in order of first appearance."""
        seen: dict[str, None] = {}
        for record in self.records:
            for concept in record.concepts:
                seen.setdefault(concept, None)
        return list(seen)

    def has_group_metadata(self) -> bool:
        return any(m.group for m in self.meta.values())


@dataclass(frozen=True)
class ConceptSlice:
    """A view of all corpus rows carrying one concept, in corpus order."""

    concept: str
    corpus: Corpus
    rows: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def records(self) -> list[SentenceRecord]:
        return [self.corpus.records[i] for i in self.rows]

    def texts(self) -> list[str]:
        return [self.corpus.records[i].text for i in self.rows]

    def ids(self) -> list[tuple[str, str]]:
        return [self.corpus.records[i].key for i in self.rows]


@dataclass
class ValidationReport:
    valid: bool
    violations: list[str]
    concept_counts: dict[str, int]
    total_sentences: int
    total_concept_assignments: int


def parse_corpus_csv(
    data: bytes | str,
    *,
    strict_taxonomy: bool = False,
    taxonomy: tuple[str, ...] | None = None,
) -> Corpus:
    """Parse a corpus CSV byte stream or string into a :class:`Corpus`.

    Raises:
        MalformedCsvError: bad quoting, missing columns, short rows,
            non-integer or out-of-range years, empty id/concept cells.
        DuplicateSentenceIdError: repeated (file_id, sentence_id) pair.
        EmptyTextError: a text cell with no word tokens.
        UnknownConceptError: in strict mode, a concept outside the taxonomy.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise MalformedCsvError(f"input is not valid UTF-8: {exc}") from exc
    else:
        text = data.lstrip("﻿")

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader, None)
    except csv.Error as exc:
        raise MalformedCsvError(f"unreadable CSV header: {exc}") from exc
    if not header:
        raise MalformedCsvError("empty input: no header row")
    columns = [name.strip() for name in header]
    missing = [name for name in REQUIRED_COLUMNS if name not in columns]
    if missing:
        raise MalformedCsvError(f"missing required column(s): {', '.join(missing)}")
    index = {name: columns.index(name) for name in columns}

    known = taxonomy or _builtin_taxonomy()
    records: list[SentenceRecord] = []
    meta: dict[str, ReportMeta] = {}
    seen: set[tuple[str, str]] = set()

    while True:
        try:
            row = next(reader, None)
        except csv.Error as exc:
            raise MalformedCsvError(f"line {reader.line_num}: {exc}") from exc
        if row is None:
            break
        if not row:
            continue  # blank line
        lineno = reader.line_num
        if len(row) != len(columns):
            raise MalformedCsvError(
                f"line {lineno}: expected {len(columns)} fields, got {len(row)}"
            )

        file_id = row[index["file_id"]].strip()
        sentence_id = row[index["sentence_id"]].strip()
        if not file_id or not sentence_id:
            raise MalformedCsvError(f"line {lineno}: empty file_id or sentence_id")
        key = (file_id, sentence_id)
        if key in seen:
            raise DuplicateSentenceIdError(
                f"line {lineno}: duplicate sentence id {file_id}/{sentence_id}"
            )
        seen.add(key)

        sentence_text = row[index["text"]].strip()
        if not tokenize_words(sentence_text):
            raise EmptyTextError(f"line {lineno}: text has no word tokens")

        raw_concepts = row[index["concepts"]].split(CONCEPT_SEPARATOR)
        concepts: list[str] = []
        for name in (c.strip() for c in raw_concepts):
            if name and name not in concepts:
                concepts.append(name)
        if not concepts:
            raise MalformedCsvError(f"line {lineno}: empty concepts cell")
        if strict_taxonomy:
            for name in concepts:
                if name not in known:
                    raise UnknownConceptError(f"line {lineno}: unknown concept {name!r}")

        records.append(SentenceRecord(file_id, sentence_id, sentence_text, tuple(concepts)))

        year: int | None = None
        if "year" in index and row[index["year"]].strip():
            cell = row[index["year"]].strip()
            try:
                year = int(cell)
            except ValueError as exc:
                raise MalformedCsvError(f"line {lineno}: year {cell!r} is not an integer") from exc
            if not MIN_YEAR <= year <= MAX_YEAR:
                raise MalformedCsvError(f"line {lineno}: year {year} outside {MIN_YEAR}-{MAX_YEAR}")
        group: str | None = None
        if "group" in index and row[index["group"]].strip():
            group = row[index["group"]].strip()
        if year is not None or group is not None:
            previous = meta.get(file_id)
            if previous is not None:
                # last writer wins, but keep earlier values the new row omits
                year = year if year is not None else previous.year
                group = group if group is not None else previous.group
            meta[file_id] = ReportMeta(file_id, year, group)

    return Corpus(tuple(records), meta)


def load_corpus_csv(path: str | Path, *, strict_taxonomy: bool = False) -> Corpus:
    return parse_corpus_csv(Path(path).read_bytes(), strict_taxonomy=strict_taxonomy)


def serialize_corpus_csv(corpus: Corpus) -> str:
    """Render a corpus back to CSV text. parse(serialize(c)) == c."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(REQUIRED_COLUMNS) + list(OPTIONAL_COLUMNS))
    for record in corpus.records:
        meta = corpus.meta.get(record.file_id)
        writer.writerow(
            [
                record.file_id,
                record.sentence_id,
                record.text,
                CONCEPT_SEPARATOR.join(record.concepts),
                "" if meta is None or meta.year is None else str(meta.year),
                "" if meta is None or meta.group is None else meta.group,
            ]
        )
    return out.getvalue()


def validate_corpus(
    corpus: Corpus,
    *,
    strict_taxonomy: bool = False,
    taxonomy: tuple[str, ...] | None = None,
) -> ValidationReport:
    """Check corpus invariants and tally per-concept counts.

    Reports violations instead of raising, so a caller can surface every
    problem at once. A sentence with m concepts counts once per concept,
    so the assignment total can exceed the distinct sentence total.
    """
    violations: list[str] = []
    known = taxonomy or _builtin_taxonomy()
    seen: set[tuple[str, str]] = set()
    counts: Counter[str] = Counter()
    assignments = 0

    for i, record in enumerate(corpus.records):
        if record.key in seen:
            violations.append(f"record {i}: duplicate sentence id {record.file_id}/{record.sentence_id}")
        seen.add(record.key)
        if not tokenize_words(record.text):
            violations.append(f"record {i}: text has no word tokens")
        if not record.concepts:
            violations.append(f"record {i}: no concept labels")
        for concept in record.concepts:
            counts[concept] += 1
            assignments += 1
            if strict_taxonomy and concept not in known:
                violations.append(f"record {i}: unknown concept {concept!r}")

    file_ids = {record.file_id for record in corpus.records}
    for file_id, meta in corpus.meta.items():
        if file_id not in file_ids:
            violations.append(f"meta: file_id {file_id!r} has no records")
        if meta.year is not None and not MIN_YEAR <= meta.year <= MAX_YEAR:
            violations.append(f"meta: file_id {file_id!r} year {meta.year} outside {MIN_YEAR}-{MAX_YEAR}")
        if meta.group is not None and not meta.group.strip():
            violations.append(f"meta: file_id {file_id!r} has a blank group label")

    return ValidationReport(
        valid=not violations,
        violations=violations,
        concept_counts=dict(counts),
        total_sentences=len(corpus.records),
        total_concept_assignments=assignments,
    )


def slice_by_concept(corpus: Corpus, concept: str) -> ConceptSlice:
    """All rows carrying ``concept``, in corpus order. Unknown concept -> empty slice."""
    rows = tuple(i for i, record in enumerate(corpus.records) if concept in record.concepts)
    return ConceptSlice(concept, corpus, rows)


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------

# Twelve topic words per taxonomy concept. Pools are pairwise disjoint so
# that concept slices stay linearly separable under bag-of-words embeddings.
_TOPIC_POOLS: tuple[tuple[str, ...], ...] = (
    ("acuity", "workload", "staffing", "surge", "demand", "capacity",
     "pressure", "backlog", "census", "overload", "strain", "rota"),
    ("antenatal", "booking", "trimester", "gestation", "midwife", "clinic",
     "pregnancy", "appointment", "fundal", "measurement", "serial", "growth"),
    ("assessment", "investigation", "testing", "screening", "bloods", "swab",
     "examination", "diagnostics", "workup", "specimen", "laboratory", "requested"),
    ("covid", "pandemic", "isolation", "mask", "quarantine", "virus",
     "infection", "outbreak", "restriction", "visiting", "lockdown", "redeployment"),
    ("planning", "pathway", "goal", "milestone", "preference", "birthplace",
     "intention", "elective", "timetable", "agreed", "individualised", "scheduled"),
    ("communication", "handover", "briefing", "message", "telephone", "conversation",
     "informed", "explained", "relayed", "updated", "notified", "sbar"),
    ("decision", "judgement", "decided", "weighed", "considered", "alternative",
     "reasoning", "conclusion", "misjudged", "premature", "deferred", "ruled"),
    ("dispensing", "administering", "dose", "medication", "syringe", "infusion",
     "pump", "ampoule", "prescription", "pharmacy", "bolus", "oxytocin"),
    ("documentation", "notes", "record", "entry", "chart", "timestamp",
     "signature", "annotation", "proforma", "filing", "transcription", "legibility"),
    ("escalation", "referral", "senior", "consultant", "registrar", "bleep",
     "contacted", "summoned", "attendance", "urgent", "delay", "response"),
    ("guidance", "recommendation", "directive", "advisory", "framework", "criterion",
     "bulletin", "circular", "appendix", "clause", "revision", "footnote"),
    ("interpretation", "misread", "interpreted", "trace", "baseline", "variability",
     "deceleration", "classification", "category", "signal", "pathological", "suspicious"),
    ("language", "interpreter", "translation", "english", "fluency", "dialect",
     "phrase", "vocabulary", "translator", "spoken", "understood", "wording"),
    ("local", "trust", "policy", "procedure", "handbook", "intranet",
     "ward", "adaptation", "variance", "departmental", "sitewide", "localised"),
    ("monitoring", "observation", "cardiotocograph", "auscultation", "heartbeat", "readings",
     "interval", "continuous", "intermittent", "saturation", "telemetry", "hourly"),
    ("alignment", "discrepancy", "harmonised", "mapping", "conflicting", "superseded",
     "versioning", "adoption", "rollout", "interim", "crosswalk", "divergence"),
    ("national", "statutory", "mandate", "publication", "benchmark", "compliance",
     "audit", "regulation", "alert", "standard", "college", "commissioned"),
    ("obstetric", "review", "rounds", "obstetrician", "attended", "impression",
     "differential", "examined", "findings", "opinion", "daily", "wardround"),
    ("physical", "weight", "height", "bmi", "obesity", "stature",
     "build", "bodyweight", "habitus", "adiposity", "frame", "anthropometry"),
    ("layout", "environment", "corridor", "theatre", "bay", "doorway",
     "lighting", "noise", "proximity", "distance", "cramped", "signage"),
    ("psychological", "anxiety", "fear", "distress", "mood", "coping",
     "trauma", "wellbeing", "stress", "confidence", "worry", "reassurance"),
    ("risk", "stratification", "scoring", "likelihood", "threshold", "flagged",
     "elevated", "profile", "predisposing", "weighting", "matrix", "checklist"),
    ("situation", "awareness", "overview", "picture", "cue", "anticipation",
     "vigilance", "tracking", "unfolding", "noticing", "perception", "projection"),
    ("slip", "lapse", "forgot", "omitted", "oversight", "mislabelled",
     "transposed", "skipped", "inattention", "distraction", "interruption", "misplaced"),
    ("teamworking", "team", "collaboration", "coordination", "roles", "leadership",
     "support", "cohesion", "debrief", "huddle", "colleagues", "multidisciplinary"),
    ("technology", "equipment", "device", "software", "interface", "alarm",
     "battery", "cable", "malfunction", "calibration", "workstation", "printer"),
    ("training", "education", "induction", "competency", "refresher", "simulation",
     "mandatory", "elearning", "drills", "mentorship", "supervision", "curriculum"),
)

# Connective words shared across every concept; all are stopwords, so
# generated headings stay inside the concept's topic pool.
_FILLER_WORDS: tuple[str, ...] = (
    "the", "was", "were", "during", "after", "with", "for", "and",
    "then", "that", "this", "a", "to", "of", "on", "at", "by", "before",
)

_SENTENCES_PER_FILE = 10


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a synthetic corpus: concept count, sentences per concept, groups."""

    n_concepts: int
    sentences_per_concept: int
    groups: tuple[str, ...] = ()


BUNDLED_SPEC = SyntheticSpec(n_concepts=5, sentences_per_concept=100, groups=RECOGNIZED_GROUPS)


def _pool_for(index: int) -> tuple[str, ...]:
    if index < len(_TOPIC_POOLS):
        return _TOPIC_POOLS[index]
    return tuple(f"c{index:02d}w{j:02d}" for j in range(12))


def _concept_name_for(index: int, taxonomy: tuple[str, ...]) -> str:
    if index < len(taxonomy):
        return taxonomy[index]
    return f"Synthetic concept {index + 1}"


def generate_synthetic_corpus(spec: SyntheticSpec, seed: int) -> Corpus:
    """Generate a labelled corpus deterministically from (spec, seed).

    Each concept draws sentences from its own disjoint topic pool plus a
    shared filler-word pool; sentences are chunked into files of ten rows,
    and group labels rotate round-robin over files.
    """
    if spec.n_concepts < 1 or spec.sentences_per_concept < 1:
        raise InvalidSpecError(f"spec sizes must be positive, got {spec}")
    if any(not g.strip() for g in spec.groups):
        raise InvalidSpecError("group labels must be non-empty")

    rng = random.Random(seed)
    taxonomy = _builtin_taxonomy()
    records: list[SentenceRecord] = []
    meta: dict[str, ReportMeta] = {}
    file_counter = 0

    for c in range(spec.n_concepts):
        concept = _concept_name_for(c, taxonomy)
        pool = _pool_for(c)
        texts: list[str] = []
        for _ in range(spec.sentences_per_concept):
            n_topic = rng.randint(4, min(7, len(pool)))
            words = rng.sample(pool, n_topic) + rng.sample(_FILLER_WORDS, rng.randint(2, 3))
            rng.shuffle(words)
            texts.append(words[0].capitalize() + " " + " ".join(words[1:]) + ".")
        for start in range(0, len(texts), _SENTENCES_PER_FILE):
            file_id = f"r{file_counter:04d}"
            chunk = texts[start : start + _SENTENCES_PER_FILE]
            for j, sentence in enumerate(chunk):
                records.append(SentenceRecord(file_id, f"s{j:02d}", sentence, (concept,)))
            year = rng.randint(2018, 2023)
            group = spec.groups[file_counter % len(spec.groups)] if spec.groups else None
            meta[file_id] = ReportMeta(file_id, year, group)
            file_counter += 1

    return Corpus(tuple(records), meta)


def bundled_synthetic_corpus() -> Corpus:
    """The synthetic corpus shipped with the package (5 concepts x 100 sentences)."""
    data = resources.files("clustersum.data").joinpath("synthetic_corpus.csv").read_bytes()
    return parse_corpus_csv(data)
