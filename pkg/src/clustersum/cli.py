"""Command-line interface.

Subcommands:

- ``run --config cfg.json``: execute the pipeline and emit the delimited
  outputs plus manifest into the configured output directory.
- ``metrics --original a.txt --summary b.txt``: score one summary against
  one original and print the six metric values.
- ``gen-corpus --spec spec.json --seed 7``: generate a synthetic corpus CSV.
- ``equity --config cfg.json``: run the pipeline and print the
  metric-by-group table (the corpus must carry group metadata).
- ``report --run-dir out``: render figures and a long-format CSV from a
  finished run directory.

The embedding backend selector (``stub`` or ``sidecar:<command>``) can be
overridden per invocation: the ``--backend`` flag wins over the
``CS_BACKEND`` environment variable, which wins over the config file.

Exit codes: 0 success, 1 usage or validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .analytics import equity_report, table_to_csv, table_to_markdown
from .corpus import SyntheticSpec, generate_synthetic_corpus, load_corpus_csv, serialize_corpus_csv
from .embedding import create_embedding_backend
from .errors import ClusterSumError, InvalidSpecError, ValidationError
from .metrics import METRIC_NAMES, evaluate_summary
from .pipeline import EQUITY_FILE, RunConfig, emit_outputs, run_pipeline

BACKEND_ENV_VAR = "CS_BACKEND"

logger = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse normally exits with code 2 on bad usage; we map usage
    problems to exit code 1 instead, with the usage text on stderr."""

    def error(self, message: str):
        raise _UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _resolve_backend(flag_value: str | None, config_value: str) -> str:
    if flag_value:
        return flag_value
    env_value = os.environ.get(BACKEND_ENV_VAR)
    if env_value:
        return env_value
    return config_value


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_json_file(args.config)
    backend = _resolve_backend(args.backend, config.embedding_backend)
    if backend != config.embedding_backend:
        config = replace(config, embedding_backend=backend)
    return config


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    result = run_pipeline(config)
    written = emit_outputs(result)
    print(f"run {result.run_id}: {len(result.artifacts)} artifacts, "
          f"{len(result.skipped)} skipped")
    for path in written:
        print(f"  wrote {path}")
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    original = Path(args.original).read_text(encoding="utf-8")
    summary = Path(args.summary).read_text(encoding="utf-8")
    backend = create_embedding_backend(_resolve_backend(args.backend, "stub"))
    try:
        record = evaluate_summary(original, summary, backend)
    finally:
        backend.close()
    for name in METRIC_NAMES:
        print(f"{name}: {getattr(record, name):.6f}")
    return 0


def _cmd_gen_corpus(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidSpecError(f"spec {args.spec} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidSpecError("corpus spec must be a JSON object")
    allowed = {"n_concepts", "sentences_per_concept", "groups"}
    unknown = set(data) - allowed
    if unknown:
        raise InvalidSpecError(f"unknown spec key(s): {', '.join(sorted(unknown))}")
    try:
        spec = SyntheticSpec(
            n_concepts=int(data["n_concepts"]),
            sentences_per_concept=int(data["sentences_per_concept"]),
            groups=tuple(data.get("groups", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpecError(f"bad corpus spec: {exc}") from exc
    corpus = generate_synthetic_corpus(spec, args.seed)
    text = serialize_corpus_csv(corpus)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text, encoding="utf-8", newline="")
        print(f"wrote {len(corpus.records)} sentences to {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_equity(args: argparse.Namespace) -> int:
    config = _load_config(args)
    corpus = load_corpus_csv(config.input_path, strict_taxonomy=config.strict_taxonomy)
    result = run_pipeline(config, corpus)
    table = equity_report(corpus, result)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / EQUITY_FILE
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(table_to_csv(table))
    sys.stdout.write(table_to_markdown(table))
    print(f"\nwrote {path}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    from .report import render_report  # matplotlib import stays off the run path

    written = render_report(args.run_dir, args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="clustersum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="execute the pipeline from a JSON config")
    run.add_argument("--config", required=True, help="path to a JSON run config")
    run.add_argument("--backend", help="embedding backend override: stub or sidecar:<command>")
    run.set_defaults(func=_cmd_run)

    met = sub.add_parser("metrics", help="score a summary file against an original file")
    met.add_argument("--original", required=True, help="path to the original text")
    met.add_argument("--summary", required=True, help="path to the summary text")
    met.add_argument("--backend", help="embedding backend override: stub or sidecar:<command>")
    met.set_defaults(func=_cmd_metrics)

    gen = sub.add_parser("gen-corpus", help="generate a synthetic corpus CSV")
    gen.add_argument("--spec", required=True, help="path to a JSON corpus spec")
    gen.add_argument("--seed", required=True, type=int, help="generator seed")
    gen.add_argument("--output", help="output CSV path (default: stdout)")
    gen.set_defaults(func=_cmd_gen_corpus)

    eq = sub.add_parser("equity", help="run the pipeline and report metrics by group")
    eq.add_argument("--config", required=True, help="path to a JSON run config")
    eq.add_argument("--backend", help="embedding backend override: stub or sidecar:<command>")
    eq.set_defaults(func=_cmd_equity)

    rep = sub.add_parser("report", help="render figures from a finished run directory")
    rep.add_argument("--run-dir", required=True, help="directory holding summaries.csv")
    rep.add_argument("--out", help="directory for figures (default: the run directory)")
    rep.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ClusterSumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
