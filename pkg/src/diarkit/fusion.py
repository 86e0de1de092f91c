"""Speech-score fusion with an external VAD and single-speaker frame picking.

The diarization activity and an auxiliary VAD track are blended into one
speech score per frame; frames that clear the speech threshold get exactly
one speaker (the one holding the largest share of the frame's activity mass),
everything else is silence.  The resulting segmentation therefore never
contains overlapping speech.
"""

from __future__ import annotations

import numpy as np

from .timeline import Segment, SpeakerActivityMatrix, Timeline

__all__ = [
    "SILENCE",
    "EVIDENCE_MODES",
    "VadTrack",
    "fuse_vad",
    "redistribute_and_pick",
    "decisions_to_timeline",
]

SILENCE = -1

EVIDENCE_MODES = ("max", "noisy_or")


class VadTrack:
    """Per-frame speech probabilities from an external VAD model."""

    def __init__(self, frame_rate: float, probabilities: np.ndarray) -> None:
        if frame_rate <= 0:
            raise ValueError(f"frame_rate must be positive, got {frame_rate}")
        probs = np.array(probabilities, dtype=np.float64)
        if probs.ndim != 1:
            raise ValueError(f"VAD probabilities must be 1-D, got shape {probs.shape}")
        if probs.size and not (
            np.isfinite(probs).all() and probs.min() >= 0.0 and probs.max() <= 1.0
        ):
            raise ValueError("VAD probabilities must lie in [0, 1]")
        probs.setflags(write=False)
        self.frame_rate = float(frame_rate)
        self.probabilities = probs

    @property
    def num_frames(self) -> int:
        return self.probabilities.shape[0]


def fuse_vad(
    diar: SpeakerActivityMatrix,
    vad: VadTrack,
    weight: float = 0.8,
    evidence: str = "max",
) -> np.ndarray:
    """Blend VAD and diarization into one speech score per frame.

    ``score(t) = weight * p_vad(t) + (1 - weight) * e(t)`` where the
    diarization evidence e is the per-frame maximum activity (default) or the
    noisy-or ``1 - prod_s (1 - d(s, t))``.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"fusion weight must lie in [0, 1], got {weight}")
    if evidence not in EVIDENCE_MODES:
        raise ValueError(f"evidence must be one of {EVIDENCE_MODES}, got {evidence!r}")
    if vad.num_frames != diar.num_frames:
        raise ValueError(
            f"VAD has {vad.num_frames} frames but diarization has {diar.num_frames}"
        )
    if vad.frame_rate != diar.frame_rate:
        raise ValueError(
            f"VAD frame rate {vad.frame_rate} does not match diarization "
            f"frame rate {diar.frame_rate}"
        )
    if evidence == "max":
        diar_evidence = diar.values.max(axis=1) if diar.num_frames else np.zeros(0)
    else:
        diar_evidence = 1.0 - (1.0 - diar.values).prod(axis=1)
    return weight * vad.probabilities + (1.0 - weight) * diar_evidence


def redistribute_and_pick(
    diar: SpeakerActivityMatrix,
    speech_scores: np.ndarray,
    speech_threshold: float = 0.5,
) -> np.ndarray:
    """Assign each frame to silence or exactly one speaker.

    Frames scoring below ``speech_threshold`` become SILENCE.  On speech
    frames the activity mass is renormalized across speakers and the largest
    share wins (ties go to the lower speaker index); since rescaling a row by
    a positive factor never changes its argmax, the raw activity row decides.
    Speech-scored frames with an all-zero activity row also become SILENCE.
    """
    scores = np.asarray(speech_scores, dtype=np.float64)
    if scores.shape != (diar.num_frames,):
        raise ValueError(
            f"scores have shape {scores.shape} but diarization has {diar.num_frames} frames"
        )
    decisions = np.full(diar.num_frames, SILENCE, dtype=int)
    if diar.num_frames == 0:
        return decisions
    speech = scores >= speech_threshold
    has_mass = diar.values.sum(axis=1) > 0.0
    chosen = diar.values.argmax(axis=1)
    pick = speech & has_mass
    decisions[pick] = chosen[pick]
    return decisions


def _runs(values: np.ndarray) -> list[tuple[int, int, int]]:
    """Maximal constant runs as (value, start_frame, stop_frame)."""
    runs: list[tuple[int, int, int]] = []
    start = 0
    for t in range(1, len(values) + 1):
        if t == len(values) or values[t] != values[start]:
            runs.append((int(values[start]), start, t))
            start = t
    return runs


def decisions_to_timeline(
    decisions: np.ndarray,
    frame_rate: float,
    min_duration_on: float = 0.0,
    min_duration_off: float = 0.0,
    recording_id: str = "",
    speaker_labels: list[str] | None = None,
) -> Timeline:
    """Turn per-frame decisions into a non-overlapping segment timeline.

    Maximal constant-speaker runs become segments with boundaries on frame
    edges.  Smoothing, when enabled, first drops speech runs strictly shorter
    than ``min_duration_on``, then bridges silence gaps strictly shorter than
    ``min_duration_off`` that sit between two runs of the same speaker.
    """
    if frame_rate <= 0:
        raise ValueError(f"frame_rate must be positive, got {frame_rate}")
    if min_duration_on < 0 or min_duration_off < 0:
        raise ValueError("smoothing durations must be >= 0")
    values = np.asarray(decisions, dtype=int).copy()
    if values.ndim != 1:
        raise ValueError(f"decisions must be 1-D, got shape {values.shape}")

    if min_duration_on > 0:
        for value, start, stop in _runs(values):
            if value != SILENCE and (stop - start) / frame_rate < min_duration_on:
                values[start:stop] = SILENCE
    if min_duration_off > 0:
        runs = _runs(values)
        for idx in range(1, len(runs) - 1):
            value, start, stop = runs[idx]
            previous, following = runs[idx - 1][0], runs[idx + 1][0]
            if (
                value == SILENCE
                and previous == following != SILENCE
                and (stop - start) / frame_rate < min_duration_off
            ):
                values[start:stop] = previous

    segments = []
    for value, start, stop in _runs(values):
        if value == SILENCE:
            continue
        label = speaker_labels[value] if speaker_labels is not None else f"spk{value}"
        segments.append(Segment(label, start / frame_rate, stop / frame_rate))
    return Timeline(recording_id, tuple(segments))
