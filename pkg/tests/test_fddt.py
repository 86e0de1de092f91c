import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diarkit.fddt import FddtLayer, apply_fddt, init_identity
from diarkit.stno import StnoMask


def _mask(rows):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return StnoMask(100.0, 0, rows)


def _random_mask(rng, frames):
    raw = rng.random((frames, 4)) + 1e-9
    return _mask(raw / raw.sum(axis=1, keepdims=True))


def test_identity_layer_shape_and_values():
    layer = init_identity(1)
    assert layer.weights.tolist() == [[[1.0]]] * 4
    assert layer.biases.tolist() == [[0.0]] * 4

    three = init_identity(3)
    assert np.trace(three.weights[1]) == 3.0
    assert (three.weights[1][~np.eye(3, dtype=bool)] == 0.0).all()


def test_identity_rejects_zero_dimension():
    with pytest.raises(ValueError):
        init_identity(0)


def test_identity_layer_passes_frames_through_exactly():
    layer = init_identity(3)
    z = np.arange(12.0).reshape(4, 3) - 5.0
    for mask_rows in ([[1, 0, 0, 0]] * 4, [[0.25, 0.25, 0.25, 0.25]] * 4):
        out = apply_fddt(layer, z, _mask(mask_rows))
        assert np.array_equal(out, z)


def test_one_hot_target_affine():
    weights = np.zeros((4, 1, 1))
    weights[1] = 2.0
    biases = np.zeros((4, 1))
    biases[1] = 0.5
    layer = FddtLayer(weights, biases)
    out = apply_fddt(layer, np.array([[3.0]]), _mask([[0, 1, 0, 0]]))
    assert out[0, 0] == 6.5


def test_blended_scalar_case():
    weights = np.array([0.0, 1.0, 2.0, 3.0]).reshape(4, 1, 1)
    layer = FddtLayer(weights, np.zeros((4, 1)))
    out = apply_fddt(layer, np.array([[1.0]]), _mask([[0.1, 0.4, 0.1, 0.4]]))
    assert out[0, 0] == pytest.approx(1.8, abs=1e-12)


def test_mismatch_errors_state_both_sizes():
    layer = init_identity(2)
    with pytest.raises(ValueError, match="3.*2|2.*3"):
        apply_fddt(layer, np.zeros((4, 3)), _random_mask(np.random.default_rng(0), 4))
    with pytest.raises(ValueError, match="5.*4|4.*5"):
        apply_fddt(layer, np.zeros((4, 2)), _random_mask(np.random.default_rng(0), 5))


@given(st.integers(1, 8), st.integers(1, 16), st.integers(0, 10_000))
@settings(max_examples=60)
def test_identity_invariance_random(dim, frames, seed):
    rng = np.random.default_rng(seed)
    z = rng.uniform(-10, 10, size=(frames, dim))
    out = apply_fddt(init_identity(dim), z, _random_mask(rng, frames))
    assert np.abs(out - z).max() <= 1e-12


def test_linearity_with_zero_bias():
    rng = np.random.default_rng(11)
    dim, frames = 5, 7
    layer = FddtLayer(rng.normal(size=(4, dim, dim)), np.zeros((4, dim)))
    mask = _random_mask(rng, frames)
    z1 = rng.normal(size=(frames, dim))
    z2 = rng.normal(size=(frames, dim))
    alpha, beta = 2.5, -1.25
    combined = apply_fddt(layer, alpha * z1 + beta * z2, mask)
    separate = alpha * apply_fddt(layer, z1, mask) + beta * apply_fddt(layer, z2, mask)
    assert np.allclose(combined, separate, atol=1e-9)


def test_one_hot_reduces_to_single_affine():
    rng = np.random.default_rng(12)
    dim, frames = 4, 6
    layer = FddtLayer(rng.normal(size=(4, dim, dim)), rng.normal(size=(4, dim)))
    z = rng.normal(size=(frames, dim))
    hot = np.zeros((frames, 4))
    classes = rng.integers(0, 4, frames)
    hot[np.arange(frames), classes] = 1.0
    out = apply_fddt(layer, z, _mask(hot))
    per_class = np.stack([z @ layer.weights[c].T + layer.biases[c] for c in range(4)])
    for t in range(frames):
        assert np.array_equal(out[t], per_class[classes[t], t])


def test_convex_blend_norm_bound_zero_bias():
    rng = np.random.default_rng(13)
    dim, frames = 6, 20
    layer = FddtLayer(rng.normal(size=(4, dim, dim)), np.zeros((4, dim)))
    z = rng.normal(size=(frames, dim))
    mask = _random_mask(rng, frames)
    out = apply_fddt(layer, z, mask)
    per_class = np.stack([z @ layer.weights[c].T for c in range(4)])
    bound = np.linalg.norm(per_class, axis=2).max(axis=0)
    assert (np.linalg.norm(out, axis=1) <= bound + 1e-9).all()


def test_layer_validation():
    with pytest.raises(ValueError):
        FddtLayer(np.zeros((4, 2, 3)), np.zeros((4, 2)))
    with pytest.raises(ValueError):
        FddtLayer(np.zeros((3, 2, 2)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        FddtLayer(np.full((4, 1, 1), np.nan), np.zeros((4, 1)))
