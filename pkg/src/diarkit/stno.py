"""Per-frame speaker-context probabilities for one target speaker.

For a chosen target speaker, every frame's multi-speaker activity folds into
four class probabilities: silence (nobody speaks), target (only the target
speaks), non-target (someone else speaks, target silent), and overlap (target
plus at least one other).  The four values always partition probability one.
"""

from __future__ import annotations

import numpy as np

from .timeline import SpeakerActivityMatrix

__all__ = ["STNO_LABELS", "StnoMask", "compute_stno"]

STNO_LABELS = ("S", "T", "N", "O")

# Values in [-1e-12, 0) are rounding dust and get clamped; anything lower
# means the input activity was not a probability and is refused.
_NEG_TOLERANCE = 1e-12
_SUM_TOLERANCE = 1e-9


class StnoMask:
    """T x 4 read-only grid of (silence, target, non-target, overlap) rows."""

    def __init__(self, frame_rate: float, target_index: int, values: np.ndarray) -> None:
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ValueError(f"mask values must be T x 4, got shape {arr.shape}")
        if frame_rate <= 0:
            raise ValueError(f"frame_rate must be positive, got {frame_rate}")
        if target_index < 0:
            raise ValueError(f"target index must be >= 0, got {target_index}")
        if arr.size:
            if not (np.isfinite(arr).all() and arr.min() >= 0.0 and arr.max() <= 1.0):
                raise ValueError("mask probabilities must lie in [0, 1]")
            sums = arr.sum(axis=1)
            worst = np.abs(sums - 1.0).max()
            if worst > _SUM_TOLERANCE:
                raise ValueError(
                    f"mask rows must sum to 1 within {_SUM_TOLERANCE}, worst deviation {worst}"
                )
        arr.setflags(write=False)
        self.frame_rate = float(frame_rate)
        self.target_index = int(target_index)
        self.values = arr

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    def __repr__(self) -> str:
        return f"StnoMask(frames={self.num_frames}, target={self.target_index})"


def compute_stno(matrix: SpeakerActivityMatrix, target_index: int) -> StnoMask:
    """Fold per-speaker activity into the four target-context probabilities.

    With d(s, t) the activity of speaker s at frame t and k the target:

    * silence     = prod_s (1 - d(s, t))
    * target      = d(k, t) * prod_{s != k} (1 - d(s, t))
    * non-target  = (1 - silence) - d(k, t)
    * overlap     = d(k, t) - target

    Each output is algebraically non-negative for inputs in [0, 1]; tiny
    negative rounding residue is clamped to zero.
    """
    if not 0 <= target_index < matrix.num_speakers:
        raise ValueError(
            f"target index {target_index} out of range for {matrix.num_speakers} speakers"
        )
    activity = matrix.values
    inactive = 1.0 - activity
    p_silence = inactive.prod(axis=1)
    d_target = activity[:, target_index]
    p_target = d_target * np.delete(inactive, target_index, axis=1).prod(axis=1)
    p_nontarget = (1.0 - p_silence) - d_target
    p_overlap = d_target - p_target
    rows = np.stack([p_silence, p_target, p_nontarget, p_overlap], axis=1)
    if rows.size and rows.min() < -_NEG_TOLERANCE:
        raise ValueError(
            f"activity values produced probability {rows.min()}; input is not a valid "
            "probability matrix"
        )
    np.clip(rows, 0.0, None, out=rows)
    return StnoMask(matrix.frame_rate, target_index, rows)
