"""Training-chunk planning and test-like audio muting.

``make_chunks`` greedily packs consecutive transcript segments into chunks
whose time span stays within a model's input limit.  ``make_testlike``
rewrites audio so that unannotated regions carrying noticeable energy are
silenced while annotated speech and genuinely silent gaps stay bit-identical,
mimicking how held-out test audio is prepared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .formats import TranscriptSegment
from .timeline import Timeline

__all__ = ["Chunk", "ChunkPlan", "make_chunks", "make_testlike"]


@dataclass(frozen=True)
class Chunk:
    """Consecutive segments of one recording packed into one training piece."""

    recording_id: str
    start: float
    end: float
    segment_indices: tuple[int, ...]
    oversized: bool

    @property
    def span(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class ChunkPlan:
    chunks: tuple[Chunk, ...]

    def __len__(self) -> int:
        return len(self.chunks)


def make_chunks(segments: list[TranscriptSegment], max_span: float = 30.0) -> ChunkPlan:
    """Greedily pack consecutive segments into chunks of span <= ``max_span``.

    A chunk keeps absorbing the next segment of its recording while the span
    from the first member's start to the latest end stays within the limit.
    Every segment lands in exactly one chunk; a lone segment longer than the
    limit becomes its own chunk with ``oversized`` set.

    Raises:
        ValueError: if segments of one recording are not sorted by start.
    """
    if max_span <= 0:
        raise ValueError(f"max span must be positive, got {max_span}")
    by_recording: dict[str, list[int]] = {}
    for idx, seg in enumerate(segments):
        by_recording.setdefault(seg.session_id, []).append(idx)
    for recording_id, indices in by_recording.items():
        starts = [segments[i].start for i in indices]
        if any(b < a for a, b in zip(starts, starts[1:])):
            raise ValueError(f"segments of recording {recording_id!r} are not sorted by start")

    chunks: list[Chunk] = []
    for recording_id, indices in by_recording.items():
        members: list[int] = []
        chunk_start = chunk_end = 0.0
        for idx in indices:
            seg = segments[idx]
            if members and max(chunk_end, seg.end) - chunk_start <= max_span:
                members.append(idx)
                chunk_end = max(chunk_end, seg.end)
            else:
                if members:
                    chunks.append(_close(recording_id, members, chunk_start, chunk_end, max_span))
                members = [idx]
                chunk_start, chunk_end = seg.start, seg.end
        if members:
            chunks.append(_close(recording_id, members, chunk_start, chunk_end, max_span))
    return ChunkPlan(tuple(chunks))


def _close(
    recording_id: str, members: list[int], start: float, end: float, max_span: float
) -> Chunk:
    return Chunk(recording_id, start, end, tuple(members), end - start > max_span)


def make_testlike(
    samples: np.ndarray,
    sample_rate: int,
    annotated: Timeline,
    window: float = 0.025,
    hop: float = 0.010,
    energy_floor_dbfs: float = -35.0,
) -> np.ndarray:
    """Mute unannotated audio regions that contain noticeable energy.

    The complement of the annotated speech is scanned with sliding RMS
    windows; if any window of a complement region exceeds the energy floor,
    the whole region is zeroed.  Samples inside annotated speech are copied
    bit-exactly, and silent complement regions stay unchanged, so the
    operation is idempotent.

    A sample belongs to the annotated speech when its center time
    ``(i + 0.5) / rate`` falls inside any annotated interval.

    Raises:
        ValueError: if the annotations extend beyond the audio duration.
    """
    if sample_rate <= 0:
        raise ValueError(f"sample rate must be positive, got {sample_rate}")
    if window <= 0 or hop <= 0:
        raise ValueError("window and hop must be positive")
    audio = np.array(samples, dtype=np.float64)
    if audio.ndim != 1:
        raise ValueError(f"samples must be 1-D, got shape {audio.shape}")
    duration = audio.shape[0] / sample_rate
    if annotated.extent() > duration + 1e-9:
        raise ValueError(
            f"annotations extend to {annotated.extent():.3f} s but audio lasts "
            f"{duration:.3f} s"
        )

    speech = np.zeros(audio.shape[0], dtype=bool)
    for start, end in annotated.support():
        lo = max(0, math.ceil(start * sample_rate - 0.5))
        hi = min(audio.shape[0], math.ceil(end * sample_rate - 0.5))
        speech[lo:hi] = True

    floor_amplitude = 10.0 ** (energy_floor_dbfs / 20.0)
    window_len = max(1, int(round(window * sample_rate)))
    hop_len = max(1, int(round(hop * sample_rate)))

    for lo, hi in _complement_runs(speech):
        if _has_energy(audio[lo:hi], window_len, hop_len, floor_amplitude):
            audio[lo:hi] = 0.0
    return audio


def _complement_runs(speech: np.ndarray) -> list[tuple[int, int]]:
    runs: list[tuple[int, int]] = []
    start: int | None = None
    for i, is_speech in enumerate(speech):
        if not is_speech and start is None:
            start = i
        elif is_speech and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(speech)))
    return runs


def _has_energy(region: np.ndarray, window_len: int, hop_len: int, floor: float) -> bool:
    if region.size == 0:
        return False
    # Prefix sums of squares make each window RMS an O(1) lookup.
    squares = np.concatenate([[0.0], np.cumsum(region * region)])
    starts = list(range(0, max(region.size - window_len, 0) + 1, hop_len))
    if starts[-1] + window_len < region.size:
        starts.append(region.size - window_len)  # cover the tail
    for start in starts:
        stop = min(start + window_len, region.size)
        rms = math.sqrt((squares[stop] - squares[start]) / (stop - start))
        if rms > floor:
            return True
    return False
