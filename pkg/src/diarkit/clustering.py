"""Chunk-local speaker resolution: embedding clustering and activity stitching.

Local diarization labels speakers per chunk; their embeddings are clustered
bottom-up under cosine distance to tie chunk-local speakers to recording-level
identities, and the per-chunk activity grids are then merged into one matrix
spanning the recording.

The agglomerative clustering is implemented here rather than delegated, so
that the stopping rule (merge while the minimum linkage does not exceed the
threshold) and the tie order (smallest cluster-id pair first) are exact and
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .formats import EmbeddingSet
from .timeline import SpeakerActivityMatrix

__all__ = ["LINKAGES", "ChunkResult", "ClusterAssignment", "ahc_cluster", "stitch"]

LINKAGES = ("average", "single", "complete")


@dataclass(frozen=True)
class ChunkResult:
    """Local diarization output of one chunk placed at ``offset`` seconds."""

    chunk_id: str
    offset: float
    activity: SpeakerActivityMatrix

    def __post_init__(self) -> None:
        if not (math.isfinite(self.offset) and self.offset >= 0):
            raise ValueError(f"chunk offset must be >= 0, got {self.offset}")


@dataclass(frozen=True)
class ClusterAssignment:
    """Mapping from (chunk_id, local speaker) to a global speaker id."""

    mapping: dict[tuple[str, int], int]
    num_clusters: int

    def __post_init__(self) -> None:
        if self.num_clusters < 1:
            raise ValueError("assignment needs at least one cluster")
        ids = set(self.mapping.values())
        if ids != set(range(self.num_clusters)):
            raise ValueError(
                f"global ids must be contiguous 0..{self.num_clusters - 1}, got {sorted(ids)}"
            )


def _cosine_distances(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1)
    if (norms == 0).any():
        raise ValueError("cosine distance undefined for zero-norm embedding vector")
    unit = vectors / norms[:, None]
    dist = 1.0 - unit @ unit.T
    np.clip(dist, 0.0, None, out=dist)
    np.fill_diagonal(dist, 0.0)
    return dist


def ahc_cluster(
    embeddings: EmbeddingSet,
    distance_threshold: float,
    linkage: str = "average",
) -> ClusterAssignment:
    """Agglomerative clustering of embeddings under cosine distance.

    Clusters merge bottom-up while the smallest inter-cluster linkage does
    not exceed ``distance_threshold``; linkage is ``average`` (default),
    ``single`` or ``complete``.  Equal linkages resolve to the pair with the
    smallest cluster ids, where a cluster's id is its smallest member index,
    so the result is reproducible.  Global ids are numbered by first
    appearance in the embedding order.
    """
    if not (math.isfinite(distance_threshold) and distance_threshold > 0):
        raise ValueError(f"distance threshold must be positive, got {distance_threshold}")
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    vectors = np.stack([entry.vector for entry in embeddings.entries])
    dist = _cosine_distances(vectors)
    n = len(embeddings)

    # Slot i holds the cluster whose smallest member index is i.
    active = [True] * n
    sizes = [1] * n
    members: list[list[int]] = [[i] for i in range(n)]

    while True:
        best: tuple[int, int] | None = None
        best_dist = math.inf
        for i in range(n):
            if not active[i]:
                continue
            for j in range(i + 1, n):
                if active[j] and dist[i, j] < best_dist:
                    best_dist = dist[i, j]
                    best = (i, j)
        if best is None or best_dist > distance_threshold:
            break
        i, j = best
        if linkage == "average":
            combined = (sizes[i] * dist[i] + sizes[j] * dist[j]) / (sizes[i] + sizes[j])
        elif linkage == "single":
            combined = np.minimum(dist[i], dist[j])
        else:
            combined = np.maximum(dist[i], dist[j])
        dist[i, :] = combined
        dist[:, i] = combined
        dist[i, i] = 0.0
        members[i].extend(members[j])
        sizes[i] += sizes[j]
        active[j] = False

    cluster_of = np.empty(n, dtype=int)
    next_id = 0
    for i in range(n):  # slot index == smallest member, so this is appearance order
        if active[i]:
            for member in members[i]:
                cluster_of[member] = next_id
            next_id += 1
    mapping = {
        (entry.chunk_id, entry.local_speaker): int(cluster_of[idx])
        for idx, entry in enumerate(embeddings.entries)
    }
    return ClusterAssignment(mapping, next_id)


def stitch(
    chunks: Sequence[ChunkResult],
    assignment: ClusterAssignment,
    frame_rate: float,
    speaker_labels: Sequence[str] | None = None,
) -> SpeakerActivityMatrix:
    """Merge chunk-local activity into one recording-level matrix.

    A chunk covers the global frames starting at ``round(offset * rate)``.
    Where several (chunk, local speaker) sources map to the same global
    speaker and cover a frame, the value is their arithmetic mean; frames no
    chunk covers stay 0.

    Raises:
        ValueError: when a local speaker with nonzero activity has no
            assignment, or a chunk's frame rate differs from ``frame_rate``.
    """
    if frame_rate <= 0:
        raise ValueError(f"frame_rate must be positive, got {frame_rate}")
    num_global = assignment.num_clusters
    total_frames = 0
    starts: list[int] = []
    for chunk in chunks:
        if chunk.activity.frame_rate != frame_rate:
            raise ValueError(
                f"chunk {chunk.chunk_id!r} has frame rate {chunk.activity.frame_rate}, "
                f"expected {frame_rate}"
            )
        start = int(round(chunk.offset * frame_rate))
        starts.append(start)
        total_frames = max(total_frames, start + chunk.activity.num_frames)

    sums = np.zeros((total_frames, num_global))
    counts = np.zeros((total_frames, num_global))
    for chunk, start in zip(chunks, starts):
        stop = start + chunk.activity.num_frames
        for local in range(chunk.activity.num_speakers):
            column = chunk.activity.values[:, local]
            target = assignment.mapping.get((chunk.chunk_id, local))
            if target is None:
                if np.any(column > 0):
                    raise ValueError(
                        f"no cluster assignment for active local speaker "
                        f"({chunk.chunk_id!r}, {local})"
                    )
                continue
            sums[start:stop, target] += column
            counts[start:stop, target] += 1.0
    values = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    if speaker_labels is None:
        speaker_labels = [f"spk{g}" for g in range(num_global)]
    return SpeakerActivityMatrix(frame_rate, values, speaker_labels)
