"""Figure rendering from a finished run directory."""

import csv
import shutil

import pytest

from clustersum.cli import main
from clustersum.corpus import SyntheticSpec, generate_synthetic_corpus
from clustersum.errors import ValidationError
from clustersum.metrics import METRIC_NAMES
from clustersum.pipeline import (
    EQUITY_FILE,
    MANIFEST_FILE,
    SUMMARIES_FILE,
    RunConfig,
    emit_outputs,
    run_pipeline,
)
from clustersum.report import LONG_FILE, render_report

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    corpus = generate_synthetic_corpus(
        SyntheticSpec(n_concepts=3, sentences_per_concept=15, groups=("Asian", "WB")), seed=2
    )
    result = run_pipeline(RunConfig(seed=2, embedding_dim=32), corpus)
    target = tmp_path_factory.mktemp("run")
    emit_outputs(result, target)
    return target


class TestRenderReport:
    def test_full_file_set(self, run_dir, tmp_path):
        written = render_report(run_dir, tmp_path)
        names = [p.name for p in written]
        assert names == [
            LONG_FILE,
            "metrics_by_model.png",
            "metrics_by_concept.png",
            "elbow_curves.png",
            "equity_means.png",
        ]
        for path in written:
            assert path.parent == tmp_path
            assert path.stat().st_size > 0
        for path in written[1:]:
            assert path.read_bytes().startswith(PNG_MAGIC)
            assert path.stat().st_size > 5000, "figure should not be blank"

    def test_long_csv_matches_summaries(self, run_dir, tmp_path):
        render_report(run_dir, tmp_path)
        with open(run_dir / SUMMARIES_FILE, newline="", encoding="utf-8") as handle:
            artifacts = list(csv.DictReader(handle))
        with open(tmp_path / LONG_FILE, newline="", encoding="utf-8") as handle:
            long_rows = list(csv.DictReader(handle))
        assert len(long_rows) == len(artifacts) * len(METRIC_NAMES)
        first = long_rows[0]
        assert set(first) == {"run_id", "model", "concept", "cluster_index", "metric", "value"}
        assert first["metric"] == "diversity"
        assert first["value"] == artifacts[0]["diversity"]

    def test_defaults_to_run_dir(self, run_dir):
        written = render_report(run_dir)
        assert all(p.parent == run_dir for p in written)

    def test_missing_summaries(self, tmp_path):
        with pytest.raises(ValidationError):
            render_report(tmp_path / "empty")

    def test_header_only_summaries(self, run_dir, tmp_path):
        target = tmp_path / "hollow"
        target.mkdir()
        header = (run_dir / SUMMARIES_FILE).read_text(encoding="utf-8").splitlines()[0]
        (target / SUMMARIES_FILE).write_text(header + "\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            render_report(target)

    def test_optional_figures_skipped_without_sources(self, run_dir, tmp_path):
        bare = tmp_path / "bare"
        bare.mkdir()
        shutil.copy(run_dir / SUMMARIES_FILE, bare / SUMMARIES_FILE)
        written = render_report(bare)
        names = [p.name for p in written]
        assert "elbow_curves.png" not in names
        assert "equity_means.png" not in names
        assert len(names) == 3

    def test_manifest_without_equity_store(self, run_dir, tmp_path):
        partial = tmp_path / "partial"
        partial.mkdir()
        shutil.copy(run_dir / SUMMARIES_FILE, partial / SUMMARIES_FILE)
        shutil.copy(run_dir / MANIFEST_FILE, partial / MANIFEST_FILE)
        names = [p.name for p in render_report(partial)]
        assert "elbow_curves.png" in names
        assert "equity_means.png" not in names
        assert (run_dir / EQUITY_FILE).exists()  # the source run did have one


class TestReportCommand:
    def test_cli_renders(self, run_dir, tmp_path, capsys):
        out = tmp_path / "figures"
        assert main(["report", "--run-dir", str(run_dir), "--out", str(out)]) == 0
        assert "wrote" in capsys.readouterr().out
        assert (out / "metrics_by_model.png").exists()

    def test_cli_missing_dir(self, tmp_path, capsys):
        assert main(["report", "--run-dir", str(tmp_path / "nothing")]) == 1
        assert "error" in capsys.readouterr().err
