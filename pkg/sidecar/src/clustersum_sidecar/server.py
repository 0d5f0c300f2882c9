"""Line-delimited JSON server over stdio.

One JSON object per line on stdin, one response per line on stdout, in
arrival order:

    {"id": N, "op": "info"}                          -> {"id": N, "payload": {"name", "dim", "models"}}
    {"id": N, "op": "embed", "texts": [...]}         -> {"id": N, "payload": [[...], ...]}
    {"id": N, "op": "summarize", "text", "params"}   -> {"id": N, "payload": {"summary": "..."}}

A response carries exactly one of ``payload`` or ``error``; the id echoes
the request. Failures answer an error envelope with code BadRequest,
UnknownModel, or InferenceFailure; a malformed line answers an error with
id null. The loop never crashes on bad input: the session always continues
to the next line. Nothing but protocol lines is ever written to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field

from .models import (
    BUILTIN_EMBEDDER,
    BUILTIN_SUMMARIZER,
    EMBED_MODEL,
    HashEmbedder,
    NeuralSummarizer,
    available_summarizer_models,
    extractive_summary,
)

logger = logging.getLogger("clustersum_sidecar")


class RequestError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _bad_request(message: str) -> RequestError:
    return RequestError("BadRequest", message)


@dataclass
class ServerState:
    embedder: object
    models: list[str]
    _neural: dict[str, NeuralSummarizer] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return f"clustersum-sidecar/{self.embedder.name}-{self.embedder.dim}"

    def summarize(self, model: str, text: str, min_words: int, max_words: int) -> str:
        if model == BUILTIN_SUMMARIZER:
            return extractive_summary(text, min_words, max_words)
        if model not in self._neural:
            self._neural[model] = NeuralSummarizer(model)
        return self._neural[model](text, min_words, max_words)


def _parse_params(raw) -> tuple[str, int, int]:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise _bad_request("params must be an object")
    model = raw.get("model") or BUILTIN_SUMMARIZER
    if not isinstance(model, str):
        raise _bad_request("params.model must be a string")
    try:
        min_words = int(raw.get("min_words", 20))
        max_words = int(raw.get("max_words", 60))
    except (TypeError, ValueError) as exc:
        raise _bad_request(f"params.min_words/max_words must be integers: {exc}")
    if not 0 < min_words <= max_words:
        raise _bad_request(f"need 0 < min_words <= max_words, got ({min_words}, {max_words})")
    return model, min_words, max_words


def handle_request(message, state: ServerState):
    """One request object -> one response object. Never raises."""
    if not isinstance(message, dict):
        return _error(None, "BadRequest", "request must be a JSON object")
    request_id = message.get("id")
    op = message.get("op")
    try:
        if op == "info":
            payload = {
                "name": state.name,
                "dim": state.embedder.dim,
                "models": list(state.models),
            }
        elif op == "embed":
            texts = message.get("texts")
            if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
                raise _bad_request("embed needs texts: a list of strings")
            payload = state.embedder.encode(texts)
        elif op == "summarize":
            text = message.get("text")
            if not isinstance(text, str) or not text.strip():
                raise _bad_request("summarize needs a non-empty text string")
            model, min_words, max_words = _parse_params(message.get("params"))
            if model not in state.models:
                raise RequestError(
                    "UnknownModel", f"model {model!r} not served; available: {state.models}"
                )
            try:
                summary = state.summarize(model, text, min_words, max_words)
            except RequestError:
                raise
            except Exception as exc:
                raise RequestError("InferenceFailure", f"{type(exc).__name__}: {exc}")
            if not summary:
                raise RequestError("InferenceFailure", "model produced an empty summary")
            payload = {"summary": summary}
        else:
            raise _bad_request(f"unknown op {op!r}")
    except RequestError as exc:
        return _error(request_id, exc.code, exc.message)
    except Exception as exc:  # defensive: one request must never kill the loop
        logger.exception("unhandled failure for op %r", op)
        return _error(request_id, "InferenceFailure", f"{type(exc).__name__}: {exc}")
    return {"id": request_id, "payload": payload}


def _error(request_id, code: str, message: str):
    return {"id": request_id, "error": {"code": code, "message": message}}


def serve(stdin=None, stdout=None, state: ServerState | None = None) -> None:
    """Blocking loop: read request lines until end-of-input."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    if state is None:
        state = build_state()
    for line in stdin:
        if not line.strip():
            continue
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            response = _error(None, "BadRequest", f"malformed JSON line: {exc}")
        else:
            response = handle_request(message, state)
        stdout.write(json.dumps(response, sort_keys=True, ensure_ascii=False) + "\n")
        stdout.flush()


def build_state(embedder_name: str = BUILTIN_EMBEDDER, dim: int = 384, seed: int = 0) -> ServerState:
    if embedder_name == BUILTIN_EMBEDDER:
        embedder = HashEmbedder(dim=dim, seed=seed)
    elif embedder_name == EMBED_MODEL:
        from .models import MiniLMEmbedder

        embedder = MiniLMEmbedder()
    else:
        raise ValueError(f"unknown embedder {embedder_name!r}")
    return ServerState(embedder=embedder, models=available_summarizer_models())


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="clustersum-sidecar",
        description="serve embeddings and summaries over stdio as line-delimited JSON",
    )
    parser.add_argument(
        "--embedder",
        default=BUILTIN_EMBEDDER,
        choices=[BUILTIN_EMBEDDER, EMBED_MODEL],
        help="embedding model to serve",
    )
    parser.add_argument("--dim", type=int, default=384, help="builtin embedder dimension")
    parser.add_argument("--seed", type=int, default=0, help="builtin embedder seed")
    args = parser.parse_args(argv)

    logging.basicConfig(stream=sys.stderr, level=logging.WARNING)
    try:
        state = build_state(args.embedder, args.dim, args.seed)
    except Exception as exc:
        print(f"clustersum-sidecar: cannot start: {exc}", file=sys.stderr)
        return 2
    serve(state=state)
    return 0


if __name__ == "__main__":
    sys.exit(main())
