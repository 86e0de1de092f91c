"""Core interval and frame algebra: segments, timelines, activity grids.

All times are real-valued seconds.  Frame grids sample at frame centers:
frame ``t`` of a grid at rate ``r`` stands for the instant ``(t + 0.5) / r``,
which keeps interval -> frame -> interval conversions symmetric around run
boundaries.

Everything here is immutable after construction and all operations are pure,
so evaluation workers can share these objects freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Segment",
    "Timeline",
    "SpeakerActivityMatrix",
    "rasterize",
    "binarize",
    "overlap_duration",
]


@dataclass(frozen=True)
class Segment:
    """Speech region of one speaker, the half-open interval ``[start, end)``."""

    speaker: str
    start: float
    end: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValueError(f"segment times must be finite, got [{self.start}, {self.end})")
        if self.start < 0:
            raise ValueError(f"segment start must be >= 0, got {self.start}")
        if self.end <= self.start:
            raise ValueError(
                f"segment must have positive duration, got [{self.start}, {self.end})"
            )

    @property
    def duration(self) -> float:
        return self.end - self.start


def _merge_speaker_runs(segments: Iterable[Segment]) -> list[Segment]:
    # Same-speaker segments that overlap or touch collapse into one; the
    # result is sorted by (start, end, speaker).
    by_speaker: dict[str, list[Segment]] = {}
    for seg in segments:
        by_speaker.setdefault(seg.speaker, []).append(seg)
    merged: list[Segment] = []
    for speaker, segs in by_speaker.items():
        segs.sort(key=lambda s: (s.start, s.end))
        cur_start, cur_end = segs[0].start, segs[0].end
        for seg in segs[1:]:
            if seg.start <= cur_end:
                cur_end = max(cur_end, seg.end)
            else:
                merged.append(Segment(speaker, cur_start, cur_end))
                cur_start, cur_end = seg.start, seg.end
        merged.append(Segment(speaker, cur_start, cur_end))
    merged.sort(key=lambda s: (s.start, s.end, s.speaker))
    return merged


@dataclass(frozen=True)
class Timeline:
    """Ordered set of speech segments for one recording.

    Segments are kept sorted by (start, end, speaker).  Overlapping or
    touching segments of the same speaker are merged on construction, so each
    speaker's segments are pairwise disjoint with positive gaps; downstream
    time arithmetic relies on that.
    """

    recording_id: str
    segments: tuple[Segment, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(_merge_speaker_runs(self.segments)))

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def speakers(self) -> tuple[str, ...]:
        return tuple(sorted({seg.speaker for seg in self.segments}))

    def of_speaker(self, speaker: str) -> tuple[Segment, ...]:
        """Merged, sorted segments of one speaker."""
        return tuple(seg for seg in self.segments if seg.speaker == speaker)

    def extent(self) -> float:
        """Latest segment end, or 0.0 for an empty timeline."""
        return max((seg.end for seg in self.segments), default=0.0)

    def total_duration(self, speaker: str | None = None) -> float:
        """Summed segment duration, per speaker or over all speakers.

        Overlapping speech counts once per speaker, so the all-speaker total
        can exceed the recording span.
        """
        return sum(
            seg.duration for seg in self.segments if speaker is None or seg.speaker == speaker
        )

    def support(self) -> tuple[tuple[float, float], ...]:
        """Union of all segments regardless of speaker, as merged intervals."""
        out: list[tuple[float, float]] = []
        for seg in self.segments:
            if out and seg.start <= out[-1][1]:
                out[-1] = (out[-1][0], max(out[-1][1], seg.end))
            else:
                out.append((seg.start, seg.end))
        return tuple(out)


class SpeakerActivityMatrix:
    """Per-frame speaker activity probabilities on a fixed frame grid.

    ``values`` is a read-only T x S float array with every entry in [0, 1];
    column ``s`` belongs to ``speaker_labels[s]``.
    """

    def __init__(
        self,
        frame_rate: float,
        values: np.ndarray,
        speaker_labels: Sequence[str],
    ) -> None:
        if not (math.isfinite(frame_rate) and frame_rate > 0):
            raise ValueError(f"frame_rate must be positive, got {frame_rate}")
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"values must be a 2-D array, got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise ValueError("matrix needs at least one speaker column")
        labels = tuple(str(l) for l in speaker_labels)
        if len(labels) != arr.shape[1]:
            raise ValueError(
                f"got {len(labels)} speaker labels for {arr.shape[1]} columns"
            )
        if len(set(labels)) != len(labels):
            raise ValueError("speaker labels must be unique")
        if arr.size and not (np.isfinite(arr).all() and arr.min() >= 0.0 and arr.max() <= 1.0):
            raise ValueError("activity values must lie in [0, 1]")
        arr.setflags(write=False)
        self.frame_rate = float(frame_rate)
        self.values = arr
        self.speaker_labels = labels

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def num_speakers(self) -> int:
        return self.values.shape[1]

    def column(self, speaker: str) -> np.ndarray:
        return self.values[:, self.speaker_labels.index(speaker)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpeakerActivityMatrix):
            return NotImplemented
        return (
            self.frame_rate == other.frame_rate
            and self.speaker_labels == other.speaker_labels
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )

    def __repr__(self) -> str:
        return (
            f"SpeakerActivityMatrix(frames={self.num_frames}, "
            f"speakers={list(self.speaker_labels)}, rate={self.frame_rate})"
        )


def rasterize(
    timeline: Timeline, frame_rate: float, speakers: Sequence[str]
) -> SpeakerActivityMatrix:
    """Sample a timeline onto a binary frame grid.

    Frame ``t`` of speaker ``s`` is 1 exactly when the frame center
    ``(t + 0.5) / frame_rate`` falls inside one of that speaker's segments.
    The grid has ``ceil(extent * frame_rate)`` frames.

    Raises:
        ValueError: if the timeline uses a speaker missing from ``speakers``.
    """
    if not (math.isfinite(frame_rate) and frame_rate > 0):
        raise ValueError(f"frame_rate must be positive, got {frame_rate}")
    labels = tuple(speakers)
    index = {label: i for i, label in enumerate(labels)}
    for speaker in {seg.speaker for seg in timeline.segments}:
        if speaker not in index:
            raise ValueError(f"timeline speaker {speaker!r} not among rasterize speakers")
    num_frames = math.ceil(timeline.extent() * frame_rate)
    values = np.zeros((num_frames, len(labels)))
    for seg in timeline.segments:
        # (t + 0.5) / rate in [start, end)  <=>  ceil(start*rate - 0.5) <= t < ceil(end*rate - 0.5)
        lo = max(0, math.ceil(seg.start * frame_rate - 0.5))
        hi = min(num_frames, math.ceil(seg.end * frame_rate - 0.5))
        values[lo:hi, index[seg.speaker]] = 1.0
    return SpeakerActivityMatrix(frame_rate, values, labels)


def binarize(
    matrix: SpeakerActivityMatrix, threshold: float, recording_id: str = ""
) -> Timeline:
    """Turn frame activity back into segments by thresholding.

    Maximal runs of frames with activity >= ``threshold`` become one segment
    per run per speaker, with boundaries on the frame edges
    ``t / frame_rate`` and ``(t_last + 1) / frame_rate``.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie strictly between 0 and 1, got {threshold}")
    segments: list[Segment] = []
    for s, label in enumerate(matrix.speaker_labels):
        active = matrix.values[:, s] >= threshold
        start_frame: int | None = None
        for t, on in enumerate(active):
            if on and start_frame is None:
                start_frame = t
            elif not on and start_frame is not None:
                segments.append(
                    Segment(label, start_frame / matrix.frame_rate, t / matrix.frame_rate)
                )
                start_frame = None
        if start_frame is not None:
            segments.append(
                Segment(
                    label,
                    start_frame / matrix.frame_rate,
                    matrix.num_frames / matrix.frame_rate,
                )
            )
    return Timeline(recording_id, tuple(segments))


def overlap_duration(a: Sequence[Segment], b: Sequence[Segment]) -> float:
    """Total length of the set intersection of two single-speaker segment lists.

    Both inputs must already be merged and sorted (as ``Timeline.of_speaker``
    returns them); the sweep walks each list once.
    """
    total = 0.0
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i].start, b[j].start)
        hi = min(a[i].end, b[j].end)
        if hi > lo:
            total += hi - lo
        if a[i].end <= b[j].end:
            i += 1
        else:
            j += 1
    return total
