"""Aggregation of per-cluster metrics into comparison tables.

Tables are metric-by-group grids: one row per metric, one column per group
key (model name, concept, or demographic group), each cell holding
mean/std/n over the artifacts that fall into that group. The same grid
renders to CSV (one mean/std/n column triple per group) or Markdown.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import RECOGNIZED_GROUPS, Corpus, ReportMeta, concept_sort_key
from .errors import EmptyInputError, MissingMetricsError, NoGroupMetadataError
from .metrics import METRIC_NAMES
from .summarise import SummaryArtifact

GROUPINGS = ("model", "concept", "file-group")
UNGROUPED = "ungrouped"

# Group an artifact falls back to when its sources tie between groups.
TIE_GROUP = "DNR"


@dataclass(frozen=True)
class AggregateStat:
    mean: float
    std: float
    n: int


def aggregate(values: Sequence[float]) -> AggregateStat:
    """Mean and sample standard deviation (n-1 denominator; n=1 gives 0.0).

    Welford's one-pass update, so long streams do not lose precision to
    catastrophic cancellation.
    """
    if len(values) == 0:
        raise EmptyInputError("aggregate needs at least one value")
    mean = 0.0
    m2 = 0.0
    for i, value in enumerate(values, start=1):
        delta = value - mean
        mean += delta / i
        m2 += delta * (value - mean)
    n = len(values)
    std = math.sqrt(m2 / (n - 1)) if n > 1 else 0.0
    return AggregateStat(mean, std, n)


@dataclass(frozen=True)
class MetricTable:
    """Metric-by-group grid; a None cell means the group has no artifacts."""

    rows: tuple[str, ...]
    columns: tuple[str, ...]
    cells: dict[tuple[str, str], AggregateStat | None]

    def cell(self, metric: str, group: str) -> AggregateStat | None:
        return self.cells[(metric, group)]


def resolve_file_group(artifact: SummaryArtifact, meta: Mapping[str, ReportMeta]) -> str:
    """Majority group over the artifact's source sentences.

    Sentences whose file has no group metadata do not vote. No votes at all
    resolves to "ungrouped"; a tie between leading groups resolves to the
    tie group ("DNR").
    """
    votes: Counter[str] = Counter()
    for file_id, _sentence_id in artifact.source_ids:
        entry = meta.get(file_id)
        if entry is not None and entry.group:
            votes[entry.group] += 1
    if not votes:
        return UNGROUPED
    ranked = votes.most_common()
    top = [group for group, count in ranked if count == ranked[0][1]]
    if len(top) > 1:
        return TIE_GROUP
    return top[0]


def _group_order_key(group: str) -> tuple[int, str]:
    if group == UNGROUPED:
        return (2, group)
    try:
        return (0, f"{RECOGNIZED_GROUPS.index(group):03d}")
    except ValueError:
        return (1, group)


def metrics_by_group(
    artifacts: Sequence[SummaryArtifact],
    grouping: str,
    meta: Mapping[str, ReportMeta] | None = None,
    extra_groups: Iterable[str] = (),
) -> MetricTable:
    """Aggregate artifact metrics into a metric-by-group table.

    ``grouping`` is one of "model", "concept", or "file-group"; the last
    needs ``meta`` to resolve groups (without it everything lands in
    "ungrouped"). ``extra_groups`` forces columns that must appear even with
    no artifacts, so missing groups show up as empty cells rather than
    silently vanishing.
    """
    if grouping not in GROUPINGS:
        raise ValueError(f"grouping must be one of {GROUPINGS}, got {grouping!r}")
    if not artifacts:
        raise EmptyInputError("metrics_by_group needs at least one artifact")
    for artifact in artifacts:
        if artifact.metrics is None:
            raise MissingMetricsError(
                f"artifact {artifact.concept!r}/{artifact.cluster_index} "
                f"(model {artifact.model!r}) has no metrics"
            )

    def group_of(artifact: SummaryArtifact) -> str:
        if grouping == "model":
            return artifact.model
        if grouping == "concept":
            return artifact.concept
        return resolve_file_group(artifact, meta or {})

    buckets: dict[str, list[SummaryArtifact]] = defaultdict(list)
    for artifact in artifacts:
        buckets[group_of(artifact)].append(artifact)

    keys = set(buckets) | set(extra_groups)
    if grouping == "model":
        columns = tuple(sorted(keys))
    elif grouping == "concept":
        columns = tuple(sorted(keys, key=concept_sort_key))
    else:
        columns = tuple(sorted(keys, key=_group_order_key))

    cells: dict[tuple[str, str], AggregateStat | None] = {}
    for metric in METRIC_NAMES:
        for group in columns:
            members = buckets.get(group)
            if not members:
                cells[(metric, group)] = None
            else:
                values = [getattr(a.metrics, metric) for a in members]
                cells[(metric, group)] = aggregate(values)
    return MetricTable(rows=METRIC_NAMES, columns=columns, cells=cells)


def equity_report(corpus: Corpus, run) -> MetricTable:
    """Metric-by-demographic-group table for a finished run.

    Every group present in the corpus metadata gets a column even if no
    artifact resolved to it (those cells stay empty), so missing groups are
    visible instead of dropped. Raises NoGroupMetadataError when the corpus
    has no group metadata at all.
    """
    if not corpus.has_group_metadata():
        raise NoGroupMetadataError("corpus has no group metadata; cannot build an equity report")
    artifacts = getattr(run, "artifacts", run)
    corpus_groups = {m.group for m in corpus.meta.values() if m.group}
    return metrics_by_group(artifacts, "file-group", corpus.meta, extra_groups=corpus_groups)


def table_to_csv(table: MetricTable) -> str:
    """CSV with a mean/std/n column triple per group, floats at 6 dp."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = ["metric"]
    for group in table.columns:
        header += [f"{group}_mean", f"{group}_std", f"{group}_n"]
    writer.writerow(header)
    for metric in table.rows:
        row: list[str] = [metric]
        for group in table.columns:
            stat = table.cells[(metric, group)]
            if stat is None:
                row += ["", "", ""]
            else:
                row += [f"{stat.mean:.6f}", f"{stat.std:.6f}", str(stat.n)]
        writer.writerow(row)
    return out.getvalue()


def table_to_markdown(table: MetricTable) -> str:
    """Markdown grid with "mean ± std" cells (and n when groups differ in size)."""
    lines = ["| metric | " + " | ".join(table.columns) + " |"]
    lines.append("|" + " --- |" * (len(table.columns) + 1))
    sizes = {stat.n for stat in table.cells.values() if stat is not None}
    show_n = len(sizes) > 1
    for metric in table.rows:
        cells = []
        for group in table.columns:
            stat = table.cells[(metric, group)]
            if stat is None:
                cells.append("-")
            elif show_n:
                cells.append(f"{stat.mean:.3f} ± {stat.std:.3f} (n={stat.n})")
            else:
                cells.append(f"{stat.mean:.3f} ± {stat.std:.3f}")
        lines.append(f"| {metric} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
