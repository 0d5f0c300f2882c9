"""Client side of the line-delimited JSON model-host protocol.

A sidecar is a child process that owns the heavyweight models. The client
writes one JSON request per line to its stdin and reads one JSON response
per line from its stdout:

    request:  {"id": "...", "op": "info" | "embed" | "summarize", ...}
    response: {"id": "...", "payload": ...} or
              {"id": "...", "error": {"code": "...", "message": "..."}}

Calls are serialized under a lock so a single sidecar can serve every
worker thread of a run.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading

import numpy as np

from .embedding import BackendInfo
from .errors import BackendUnavailableError, DimensionMismatchError, SidecarProtocolError


class SidecarProcess:
    """One child process plus the request/response bookkeeping."""

    def __init__(self, command: str):
        argv = shlex.split(command)
        if not argv:
            raise BackendUnavailableError("empty sidecar command")
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BackendUnavailableError(f"cannot start sidecar {argv[0]!r}: {exc}") from exc
        self._command = command
        self._lock = threading.Lock()
        self._counter = 0

    def request(self, op: str, **fields):
        """Send one request and return the response payload.

        Raises BackendUnavailableError when the process is gone and
        SidecarProtocolError when it answers with an error envelope or
        malformed JSON.
        """
        with self._lock:
            self._counter += 1
            request_id = self._counter
            line = json.dumps({"id": request_id, "op": op, **fields}, ensure_ascii=False)
            try:
                assert self._proc.stdin is not None and self._proc.stdout is not None
                self._proc.stdin.write(line + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise BackendUnavailableError(
                    f"sidecar {self._command!r} is not accepting requests: {exc}"
                ) from exc
            reply = self._proc.stdout.readline()
        if not reply:
            raise BackendUnavailableError(f"sidecar {self._command!r} exited without replying")
        try:
            message = json.loads(reply)
        except json.JSONDecodeError as exc:
            raise SidecarProtocolError("BadResponse", f"unparseable reply {reply[:200]!r}") from exc
        if not isinstance(message, dict):
            raise SidecarProtocolError("BadResponse", f"expected an object, got {type(message).__name__}")
        if message.get("error") is not None:
            error = message["error"]
            raise SidecarProtocolError(
                str(error.get("code", "Unknown")), str(error.get("message", ""))
            )
        if message.get("id") != request_id:
            raise SidecarProtocolError(
                "BadResponse", f"response id {message.get('id')!r} != request id {request_id!r}"
            )
        if "payload" not in message:
            raise SidecarProtocolError("BadResponse", "response carries neither payload nor error")
        return message["payload"]

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait(timeout=5)

    def __enter__(self) -> "SidecarProcess":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class SidecarEmbeddingBackend:
    """Embedding backend served by a sidecar process."""

    def __init__(self, command: str):
        self._proc = SidecarProcess(command)
        payload = self._proc.request("info")
        try:
            self._info = BackendInfo(name=str(payload["name"]), dim=int(payload["dim"]))
        except (TypeError, KeyError, ValueError) as exc:
            self._proc.close()
            raise SidecarProtocolError("BadResponse", f"malformed info payload: {payload!r}") from exc

    @property
    def info(self) -> BackendInfo:
        return self._info

    def encode(self, texts) -> np.ndarray:
        payload = self._proc.request("embed", texts=list(texts))
        vectors = np.asarray(payload, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape != (len(texts), self._info.dim):
            raise DimensionMismatchError(
                f"sidecar returned shape {vectors.shape}, expected ({len(texts)}, {self._info.dim})"
            )
        return vectors

    def close(self) -> None:
        self._proc.close()


class SidecarSummarizer:
    """Summarisation backend served by a sidecar process."""

    def __init__(self, command: str):
        self._proc = SidecarProcess(command)
        payload = self._proc.request("info")
        self._name = str(payload.get("name", "sidecar")) if isinstance(payload, dict) else "sidecar"

    @property
    def name(self) -> str:
        return self._name

    def summarize(self, text: str, params) -> str:
        payload = self._proc.request(
            "summarize",
            text=text,
            params={
                "model": params.model,
                "min_words": params.min_words,
                "max_words": params.max_words,
            },
        )
        if not isinstance(payload, dict) or "summary" not in payload:
            raise SidecarProtocolError("BadResponse", f"malformed summarize payload: {payload!r}")
        return str(payload["summary"])

    def close(self) -> None:
        self._proc.close()
