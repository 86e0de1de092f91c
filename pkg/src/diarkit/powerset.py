"""Categorical encoding of joint speaker activity as speaker subsets.

A classification head over K speakers with at most M concurrent emits one
posterior per subset of speakers of size <= M.  The canonical state order is
by subset size, then lexicographically, so state 0 is always the empty
(silence) state; files produced under this order are interchangeable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .timeline import SpeakerActivityMatrix

__all__ = ["PowersetConfig", "enumerate_states", "decode_posteriors", "multilabel_to_state"]


def _canonical_states(num_speakers: int, max_concurrent: int) -> tuple[tuple[int, ...], ...]:
    states: list[tuple[int, ...]] = []
    for size in range(max_concurrent + 1):
        states.extend(itertools.combinations(range(num_speakers), size))
    return tuple(states)


@dataclass(frozen=True)
class PowersetConfig:
    """Speaker-subset state table for K speakers with at most M concurrent."""

    num_speakers: int
    max_concurrent: int
    states: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.states != _canonical_states(self.num_speakers, self.max_concurrent):
            raise ValueError("states do not form a canonical powerset table")

    @property
    def num_states(self) -> int:
        return len(self.states)

    def membership(self) -> np.ndarray:
        """Binary (num_states, num_speakers) matrix of state membership."""
        member = np.zeros((self.num_states, self.num_speakers))
        for idx, state in enumerate(self.states):
            for speaker in state:
                member[idx, speaker] = 1.0
        return member


def enumerate_states(num_speakers: int, max_concurrent: int) -> PowersetConfig:
    """Build the canonical state table (by size, then lexicographic)."""
    if num_speakers < 1:
        raise ValueError(f"need at least one speaker, got {num_speakers}")
    if not 1 <= max_concurrent <= num_speakers:
        raise ValueError(
            f"max_concurrent must lie in 1..{num_speakers}, got {max_concurrent}"
        )
    return PowersetConfig(num_speakers, max_concurrent, _canonical_states(num_speakers, max_concurrent))


def decode_posteriors(
    posteriors: np.ndarray,
    config: PowersetConfig,
    frame_rate: float,
    speaker_labels: Sequence[str] | None = None,
) -> SpeakerActivityMatrix:
    """Hard-decode state posteriors into binary per-speaker activity.

    Each row picks its argmax state (ties resolve to the lower state index)
    and the members of that subset become active.  Rows must be probability
    vectors summing to 1 within 1e-6.
    """
    rows = np.asarray(posteriors, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError(f"posteriors must be 2-D, got shape {rows.shape}")
    if rows.shape[1] != config.num_states:
        raise ValueError(
            f"posterior width {rows.shape[1]} does not match {config.num_states} states"
        )
    if rows.size:
        if not (np.isfinite(rows).all() and rows.min() >= 0.0 and rows.max() <= 1.0):
            raise ValueError("posterior entries must lie in [0, 1]")
        sums = rows.sum(axis=1)
        bad = np.abs(sums - 1.0) > 1e-6
        if bad.any():
            frame = int(np.argmax(bad))
            raise ValueError(
                f"posterior row {frame} sums to {sums[frame]!r}, expected 1 within 1e-6"
            )
    picks = rows.argmax(axis=1) if rows.size else np.zeros(rows.shape[0], dtype=int)
    activity = config.membership()[picks] if rows.shape[0] else np.zeros(
        (0, config.num_speakers)
    )
    if speaker_labels is None:
        speaker_labels = [f"spk{i}" for i in range(config.num_speakers)]
    return SpeakerActivityMatrix(frame_rate, activity, speaker_labels)


def multilabel_to_state(activity_row: Sequence[float], config: PowersetConfig) -> int:
    """Index of the state whose membership equals a binary activity row.

    Raises:
        ValueError: if more than ``max_concurrent`` speakers are active
            (a protocol violation), or the row is not binary.
    """
    row = np.asarray(activity_row, dtype=np.float64)
    if row.shape != (config.num_speakers,):
        raise ValueError(
            f"activity row has {row.shape} entries, expected {config.num_speakers}"
        )
    if not np.isin(row, (0.0, 1.0)).all():
        raise ValueError("activity row must be binary")
    active = tuple(int(i) for i in np.flatnonzero(row))
    if len(active) > config.max_concurrent:
        raise ValueError(
            f"{len(active)} concurrent speakers exceed the maximum "
            f"{config.max_concurrent}"
        )
    return config.states.index(active)
