"""Figure rendering for finished runs.

Reads the delimited outputs of a run directory (summaries.csv,
manifest.json, equity.csv when present) and writes PNG figures plus a
long-format metrics CSV alongside them. This stays off the batch path on
purpose: `run` emits plot-ready CSVs and nothing else, so its outputs stay
byte-stable; `report` is the optional second step that turns them into
pictures.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import ValidationError
from .metrics import METRIC_NAMES
from .pipeline import EQUITY_FILE, MANIFEST_FILE, SUMMARIES_FILE

LONG_FILE = "metrics_long.csv"
_LABEL_MAX = 18


def _shorten(label: str) -> str:
    return label if len(label) <= _LABEL_MAX else label[: _LABEL_MAX - 1] + "…"


def _read_summaries(path: Path) -> list[dict[str, str]]:
    if not path.exists():
        raise ValidationError(f"{path} not found; run the pipeline first")
    with open(path, encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    if not rows:
        raise ValidationError(f"{path} has no artifact rows")
    return rows


def _write_long_csv(rows: list[dict[str, str]], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["run_id", "model", "concept", "cluster_index", "metric", "value"])
        for row in rows:
            for metric in METRIC_NAMES:
                writer.writerow(
                    [row["run_id"], row["model"], row["concept"],
                     row["cluster_index"], metric, row[metric]]
                )


def _boxplot_grid(rows: list[dict[str, str]], key: str, title: str, path: Path) -> None:
    grouped: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        for metric in METRIC_NAMES:
            grouped[metric][row[key]].append(float(row[metric]))
    labels = sorted({row[key] for row in rows})

    fig, axes = plt.subplots(2, 3, figsize=(13, 7))
    for ax, metric in zip(axes.flat, METRIC_NAMES):
        data = [grouped[metric][label] for label in labels]
        ax.boxplot(data, tick_labels=[_shorten(l) for l in labels])
        ax.set_title(metric)
        ax.tick_params(axis="x", rotation=45, labelsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _elbow_figure(manifest_path: Path, path: Path) -> bool:
    if not manifest_path.exists():
        return False
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    selections = manifest.get("k_selections", {})
    if not selections:
        return False
    fig, ax = plt.subplots(figsize=(8, 5))
    for concept, entry in sorted(selections.items()):
        ks = sorted(int(k) for k in entry["inertias"])
        inertias = [entry["inertias"][str(k)] for k in ks]
        (line,) = ax.plot(ks, inertias, marker="o", label=_shorten(concept))
        chosen = entry["chosen_k"]
        if str(chosen) in entry["inertias"]:
            ax.plot([chosen], [entry["inertias"][str(chosen)]], marker="s",
                    markersize=10, color=line.get_color(), linestyle="none")
    ax.set_xlabel("k")
    ax.set_ylabel("inertia")
    ax.set_title("Elbow curves (square marks the chosen k)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def _equity_figure(equity_path: Path, path: Path) -> bool:
    if not equity_path.exists():
        return False
    with open(equity_path, encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    if not rows:
        return False
    groups = sorted({name[: -len("_mean")] for name in rows[0] if name.endswith("_mean")})
    fig, axes = plt.subplots(2, 3, figsize=(13, 7))
    for ax, row in zip(axes.flat, rows):
        means, stds, present = [], [], []
        for group in groups:
            cell = row.get(f"{group}_mean", "")
            if cell == "":
                continue
            present.append(group)
            means.append(float(cell))
            stds.append(float(row.get(f"{group}_std", "0") or 0))
        ax.bar(range(len(present)), means, yerr=stds, capsize=3)
        ax.set_xticks(range(len(present)))
        ax.set_xticklabels(present, rotation=45, fontsize=8)
        ax.set_title(row["metric"])
    fig.suptitle("Metric means by demographic group")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render_report(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Render figures and the long-format CSV for a finished run directory.

    Returns the list of files written. Figures that lack their source data
    (no manifest, no equity.csv) are skipped rather than failing the report.
    """
    run_path = Path(run_dir)
    target = Path(out_dir) if out_dir is not None else run_path
    target.mkdir(parents=True, exist_ok=True)
    rows = _read_summaries(run_path / SUMMARIES_FILE)

    written: list[Path] = []

    long_path = target / LONG_FILE
    _write_long_csv(rows, long_path)
    written.append(long_path)

    by_model = target / "metrics_by_model.png"
    _boxplot_grid(rows, "model", "Metric distributions by model", by_model)
    written.append(by_model)

    by_concept = target / "metrics_by_concept.png"
    _boxplot_grid(rows, "concept", "Metric distributions by concept", by_concept)
    written.append(by_concept)

    elbow_path = target / "elbow_curves.png"
    if _elbow_figure(run_path / MANIFEST_FILE, elbow_path):
        written.append(elbow_path)

    equity_png = target / "equity_means.png"
    if _equity_figure(run_path / EQUITY_FILE, equity_png):
        written.append(equity_png)

    return written
