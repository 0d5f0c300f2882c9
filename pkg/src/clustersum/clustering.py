"""K-means clustering of sentence embeddings with elbow-based k selection.

Hand-rolled Lloyd iteration rather than a library call, because the rest of
the system depends on properties libraries do not guarantee together:
deterministic output for a given seed regardless of thread schedule,
first-index tie-breaking, empty clusters repaired by moving the centroid to
the farthest point (so exactly k non-empty clusters come back), and an
inertia trace that can be asserted non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import ConceptSlice
from .errors import (
    AlignmentError,
    DegenerateInputError,
    KTooLargeError,
)

DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-6
DEFAULT_K_MAX = 10

_MASK64 = (1 << 64) - 1
# Slack for floating-point drift in monotonicity assertions.
_INERTIA_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Embeddings for one concept slice; row i embeds slice member i."""

    rows: np.ndarray
    slice: ConceptSlice

    def __post_init__(self) -> None:
        if self.rows.ndim != 2 or self.rows.shape[0] != len(self.slice.rows):
            raise AlignmentError(
                f"matrix shape {self.rows.shape} does not match slice of {len(self.slice.rows)} rows"
            )

    @property
    def row_refs(self) -> tuple[int, ...]:
        """Corpus row index for each matrix row."""
        return self.slice.rows


@dataclass(eq=False)
class KMeansResult:
    assignment: np.ndarray  # (n,) int labels in [0, k)
    centroids: np.ndarray   # (k, dim)
    inertia: float
    n_iter: int
    inertia_history: list[float] | None = None


@dataclass(frozen=True)
class KSelection:
    chosen_k: int
    candidate_inertias: dict[int, float]
    method: str


@dataclass(frozen=True, eq=False)
class Cluster:
    concept: str
    index: int
    member_rows: tuple[int, ...]               # corpus row indices, ascending
    member_ids: tuple[tuple[str, str], ...]    # (file_id, sentence_id) per member
    centroid: np.ndarray


@dataclass(frozen=True, eq=False)
class ClusterSet:
    concept: str
    clusters: tuple[Cluster, ...]


def _as_points(matrix: EmbeddingMatrix | np.ndarray) -> np.ndarray:
    if isinstance(matrix, EmbeddingMatrix):
        points = matrix.rows
    else:
        points = np.asarray(matrix, dtype=np.float64)
    if points.ndim != 2:
        raise DegenerateInputError(f"expected a 2-D point array, got shape {points.shape}")
    return points.astype(np.float64, copy=False)


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # Explicit broadcasting keeps the arithmetic order fixed, so results are
    # bit-identical run to run (BLAS-backed formulations are not).
    return ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def inertia(
    matrix: EmbeddingMatrix | np.ndarray,
    assignment: np.ndarray,
    centroids: np.ndarray,
) -> float:
    """Sum of squared distances from each point to its assigned centroid."""
    points = _as_points(matrix)
    assignment = np.asarray(assignment)
    if assignment.shape != (points.shape[0],):
        raise AlignmentError(
            f"assignment length {assignment.shape} does not match {points.shape[0]} points"
        )
    k = centroids.shape[0]
    if assignment.size and (assignment.min() < 0 or assignment.max() >= k):
        raise IndexError(f"assignment labels must be in [0, {k})")
    diffs = points - centroids[assignment]
    value = float((diffs * diffs).sum())
    if not math.isfinite(value):
        raise DegenerateInputError("inertia is not finite; input contains NaN or inf")
    return value


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))  # all remaining mass on already-chosen points
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(axis=1))
    return points[chosen].copy()


def _repair_empty_clusters(
    points: np.ndarray,
    centroids: np.ndarray,
    labels: np.ndarray,
    dists: np.ndarray,
) -> None:
    """Move each empty cluster's centroid onto the farthest assigned point.

    Only points that are not the sole member of their cluster may move, so a
    repair never creates a new empty cluster. Mutates all three arrays.
    """
    n, k = dists.shape
    counts = np.bincount(labels, minlength=k)
    for j in range(k):
        if counts[j] > 0:
            continue
        assigned = dists[np.arange(n), labels]
        movable = counts[labels] > 1
        candidate = np.where(movable, assigned, -np.inf)
        p = int(np.argmax(candidate))
        counts[labels[p]] -= 1
        labels[p] = j
        counts[j] = 1
        centroids[j] = points[p]
        dists[:, j] = ((points - points[p]) ** 2).sum(axis=1)


def kmeans(
    matrix: EmbeddingMatrix | np.ndarray,
    k: int,
    seed: int = 0,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    init_centroids: np.ndarray | None = None,
    debug: bool = False,
) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding.

    Deterministic for a given (matrix, k, seed). Ties in the assignment step
    break toward the lowest centroid index. With ``debug=True`` the result
    carries the per-iteration inertia trace and the non-increase property is
    asserted as the loop runs.

    Raises:
        KTooLargeError: k exceeds the number of points.
        DegenerateInputError: no points, or non-finite coordinates.
    """
    points = _as_points(matrix)
    n = points.shape[0]
    if n == 0:
        raise DegenerateInputError("kmeans needs at least one point")
    if not np.all(np.isfinite(points)):
        raise DegenerateInputError("kmeans input contains NaN or inf")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise KTooLargeError(f"k={k} exceeds n={n} points")

    if init_centroids is not None:
        centroids = np.asarray(init_centroids, dtype=np.float64).copy()
        if centroids.shape != (k, points.shape[1]):
            raise AlignmentError(
                f"init centroids shape {centroids.shape} != ({k}, {points.shape[1]})"
            )
    else:
        rng = np.random.Generator(np.random.PCG64(seed & _MASK64))
        centroids = _kmeanspp_init(points, k, rng)

    history: list[float] = []
    previous = math.inf
    labels = np.zeros(n, dtype=np.int64)
    iterations = 0

    for iterations in range(1, max_iter + 1):
        dists = _sq_dists(points, centroids)
        labels = dists.argmin(axis=1)
        _repair_empty_clusters(points, centroids, labels, dists)
        current = float(dists[np.arange(n), labels].sum())
        if debug:
            assert current <= previous + _INERTIA_SLACK, (
                f"inertia rose from {previous} to {current} at iteration {iterations}"
            )
            history.append(current)
        previous = current

        new_centroids = np.vstack([points[labels == j].mean(axis=0) for j in range(k)])
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break

    # Final sync so the returned assignment is nearest-centroid for the
    # returned centroids (the loop may end right after a centroid update).
    dists = _sq_dists(points, centroids)
    labels = dists.argmin(axis=1)
    _repair_empty_clusters(points, centroids, labels, dists)
    final = float(dists[np.arange(n), labels].sum())
    if debug:
        assert final <= previous + _INERTIA_SLACK, (
            f"inertia rose from {previous} to {final} in the final sync"
        )
        history.append(final)

    return KMeansResult(
        assignment=labels,
        centroids=centroids,
        inertia=final,
        n_iter=iterations,
        inertia_history=history if debug else None,
    )


def default_k_range(n: int, k_max: int = DEFAULT_K_MAX) -> tuple[int, int]:
    """Default candidate range for k: [1, min(k_max, ceil(n/5), n)]."""
    if n < 1:
        raise DegenerateInputError("k range needs at least one point")
    return 1, max(1, min(k_max, math.ceil(n / 5), n))


def _augmented_init(points: np.ndarray, result: KMeansResult) -> np.ndarray:
    """Previous centroids plus the point farthest from all of them."""
    d = _sq_dists(points, result.centroids)
    farthest = int(np.argmax(d.min(axis=1)))
    return np.vstack([result.centroids, points[farthest]])


def _elbow_search(
    matrix: EmbeddingMatrix | np.ndarray,
    k_min: int,
    k_max: int,
    seed: int = 0,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> tuple[KSelection, KMeansResult]:
    """Run kmeans over the candidate range and pick k at the elbow.

    Each candidate k is seeded with ``seed ^ k``; candidates after the first
    also try a warm start from the previous k's centroids plus the farthest
    point, and keep the better of the two. That makes the inertia curve
    non-increasing in k, which the elbow criterion needs.
    """
    points = _as_points(matrix)
    n = points.shape[0]
    if n == 0:
        raise DegenerateInputError("elbow search needs at least one point")
    if not 1 <= k_min <= k_max:
        raise ValueError(f"need 1 <= k_min <= k_max, got [{k_min}, {k_max}]")

    lo = min(k_min, n)
    hi = min(k_max, n)
    results: dict[int, KMeansResult] = {}
    previous: KMeansResult | None = None
    for k in range(lo, hi + 1):
        best = kmeans(matrix, k, seed=seed ^ k, max_iter=max_iter, tol=tol)
        if previous is not None:
            warm = kmeans(
                matrix, k, seed=seed ^ k, max_iter=max_iter, tol=tol,
                init_centroids=_augmented_init(points, previous),
            )
            if warm.inertia < best.inertia:
                best = warm
        results[k] = best
        previous = best

    candidates = sorted(results)
    inertias = {k: results[k].inertia for k in candidates}

    if len(candidates) < 3:
        chosen = hi
        method = "range-floor"
    else:
        curve = {
            k: inertias[k - 1] - 2.0 * inertias[k] + inertias[k + 1]
            for k in candidates[1:-1]
        }
        peak = max(curve.values())
        if peak <= 0.0:
            # No convex bend anywhere (flat or concave curve): no elbow
            # exists, so fall back to the smallest candidate.
            chosen = lo
            method = "flat-curve-floor"
        else:
            chosen = min(k for k, value in curve.items() if value == peak)
            method = "second-difference"

    return KSelection(chosen, inertias, method), results[chosen]


def select_k_elbow(
    matrix: EmbeddingMatrix | np.ndarray,
    k_min: int,
    k_max: int,
    seed: int = 0,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> KSelection:
    selection, _ = _elbow_search(matrix, k_min, k_max, seed, max_iter=max_iter, tol=tol)
    return selection


def build_clusters(
    slice_: ConceptSlice,
    matrix: EmbeddingMatrix,
    result: KMeansResult,
) -> ClusterSet:
    """Group slice members by their k-means label, mapped back to sentence ids.

    Every slice member lands in exactly one cluster (the clusters partition
    the slice); clusters come back ordered by label index.
    """
    if matrix.slice.rows != slice_.rows or matrix.slice.concept != slice_.concept:
        raise AlignmentError("matrix was built from a different slice")
    assignment = np.asarray(result.assignment)
    if assignment.shape != (len(slice_.rows),):
        raise AlignmentError(
            f"assignment covers {assignment.shape[0]} rows, slice has {len(slice_.rows)}"
        )
    records = slice_.corpus.records
    clusters = []
    for j in range(result.centroids.shape[0]):
        positions = np.flatnonzero(assignment == j)
        if positions.size == 0:
            continue
        rows = tuple(slice_.rows[int(i)] for i in positions)
        ids = tuple(records[r].key for r in rows)
        clusters.append(Cluster(slice_.concept, int(j), rows, ids, result.centroids[j].copy()))
    return ClusterSet(slice_.concept, tuple(clusters))


def empty_cluster_set(concept: str) -> ClusterSet:
    return ClusterSet(concept, ())


__all__ = [
    "Cluster",
    "ClusterSet",
    "EmbeddingMatrix",
    "KMeansResult",
    "KSelection",
    "build_clusters",
    "default_k_range",
    "empty_cluster_set",
    "inertia",
    "kmeans",
    "select_k_elbow",
]
