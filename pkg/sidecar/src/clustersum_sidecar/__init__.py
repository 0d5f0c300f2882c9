"""Model host for the clustersum pipeline.

Speaks a line-delimited JSON protocol over stdio; see
:mod:`clustersum_sidecar.server`. Launch as ``clustersum-sidecar`` or
``python -m clustersum_sidecar`` and point the pipeline at it with the
``sidecar:<command>`` backend selector.
"""

from .models import (
    BUILTIN_EMBEDDER,
    BUILTIN_SUMMARIZER,
    HashEmbedder,
    available_summarizer_models,
    extractive_summary,
)
from .server import build_state, handle_request, main, serve

try:
    from importlib.metadata import version

    __version__ = version("clustersum-sidecar")
except Exception:
    __version__ = "0+unknown"

__all__ = [
    "BUILTIN_EMBEDDER",
    "BUILTIN_SUMMARIZER",
    "HashEmbedder",
    "available_summarizer_models",
    "build_state",
    "extractive_summary",
    "handle_request",
    "main",
    "serve",
    "__version__",
]
