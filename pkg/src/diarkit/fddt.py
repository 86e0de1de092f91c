"""Per-frame blended affine transforms over embedding sequences.

Each of the four speaker-context classes owns one affine map (square weight
matrix plus bias).  A frame's output is the sum of the four transformed
inputs, weighted by that frame's class probabilities.  Because the
probabilities sum to one, identity-initialized maps pass frames through
unchanged, which is the property that lets a pretrained encoder start from
undisturbed behavior.

Frame sequences are plain T x D float arrays.  The kernel is one layer;
stacking over encoder depth is the caller's loop.
"""

from __future__ import annotations

import numpy as np

from .stno import StnoMask

__all__ = ["NUM_CLASSES", "FddtLayer", "init_identity", "apply_fddt"]

NUM_CLASSES = 4  # silence, target, non-target, overlap


class FddtLayer:
    """Four affine transforms over D-dimensional frame embeddings.

    ``weights`` is a read-only (4, D, D) array and ``biases`` (4, D); index
    order matches the mask columns (silence, target, non-target, overlap).
    """

    def __init__(self, weights: np.ndarray, biases: np.ndarray) -> None:
        w = np.array(weights, dtype=np.float64)
        b = np.array(biases, dtype=np.float64)
        if w.ndim != 3 or w.shape[0] != NUM_CLASSES or w.shape[1] != w.shape[2]:
            raise ValueError(f"weights must have shape (4, D, D), got {w.shape}")
        if b.shape != (NUM_CLASSES, w.shape[1]):
            raise ValueError(f"biases must have shape (4, {w.shape[1]}), got {b.shape}")
        if w.shape[1] < 1:
            raise ValueError("dimension must be >= 1")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValueError("layer parameters must be finite")
        w.setflags(write=False)
        b.setflags(write=False)
        self.weights = w
        self.biases = b

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]


def init_identity(dimension: int) -> FddtLayer:
    """Layer whose four transforms are all exact identity maps.

    Applying it leaves any frame sequence unchanged under any valid mask,
    since the class probabilities sum to one.
    """
    if dimension < 1:
        raise ValueError(f"dimension must be >= 1, got {dimension}")
    weights = np.broadcast_to(np.eye(dimension), (NUM_CLASSES, dimension, dimension)).copy()
    biases = np.zeros((NUM_CLASSES, dimension))
    return FddtLayer(weights, biases)


def apply_fddt(layer: FddtLayer, frames: np.ndarray, mask: StnoMask) -> np.ndarray:
    """Transform a T x D frame sequence under a T x 4 context mask.

    Per frame t: ``out_t = sum_c p_c(t) * (W_c @ z_t + b_c)`` over the four
    classes c.

    Raises:
        ValueError: on frame-count or dimension mismatch, stating both sizes.
    """
    z = np.asarray(frames, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"frames must be a 2-D array, got shape {z.shape}")
    if not np.isfinite(z).all():
        raise ValueError("frame embeddings must be finite")
    if mask.num_frames != z.shape[0]:
        raise ValueError(
            f"mask has {mask.num_frames} frames but embeddings have {z.shape[0]}"
        )
    if layer.dimension != z.shape[1]:
        raise ValueError(
            f"layer dimension {layer.dimension} does not match embedding dimension {z.shape[1]}"
        )
    out = np.zeros_like(z)
    for c in range(NUM_CLASSES):
        out += mask.values[:, c : c + 1] * (z @ layer.weights[c].T + layer.biases[c])
    return out
