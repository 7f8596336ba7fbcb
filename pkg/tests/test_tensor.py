import math

import numpy as np
import pytest

from guided_decode.tensor import layer_normalize, matmul, softmax


def f32(values):
    return np.asarray(values, dtype=np.float32)


class TestMatmul:
    def test_identity(self):
        eye = f32([[1, 0], [0, 1]])
        b = f32([[3, 4], [5, 6]])
        assert np.array_equal(matmul(eye, b), b)

    def test_hand_computed(self):
        out = matmul(f32([[1, 2]]), f32([[3], [4]]))
        assert out.shape == (1, 1)
        assert out[0, 0] == pytest.approx(11.0)

    def test_zero_annihilates(self):
        a = f32(np.arange(6).reshape(2, 3))
        z = np.zeros((3, 4), dtype=np.float32)
        assert np.array_equal(matmul(a, z), np.zeros((2, 4), dtype=np.float32))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            matmul(f32([[1, 2]]), f32([[1, 2]]))

    def test_result_dtype(self):
        out = matmul(f32([[1.5]]), f32([[2.0]]))
        assert out.dtype == np.float32


class TestSoftmax:
    def test_uniform(self):
        np.testing.assert_allclose(softmax(f32([0, 0, 0, 0])), [0.25] * 4, atol=1e-7)

    def test_shift_invariant_pair(self):
        for c in (-100.0, 0.0, 3.5, 41.0):
            out = softmax(f32([c, c + math.log(3)]))
            np.testing.assert_allclose(out, [0.25, 0.75], atol=1e-6)

    def test_large_logits_stable(self):
        out = softmax(f32([1000.0, 0.0]))
        assert np.all(np.isfinite(out))
        assert out[0] == pytest.approx(1.0, abs=1e-6)
        assert out[1] == pytest.approx(0.0, abs=1e-6)

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            softmax(f32([]))

    def test_sums_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            z = rng.uniform(-50, 50, size=rng.integers(1, 64)).astype(np.float32)
            assert abs(softmax(z).sum() - 1.0) < 1e-6

    def test_shift_invariance_property(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            z = rng.uniform(-50, 50, size=16).astype(np.float32)
            c = np.float32(rng.uniform(-20, 20))
            np.testing.assert_allclose(softmax(z), softmax(z + c), atol=1e-6)


class TestLayerNormalize:
    def test_constant_input_zeroed_by_eps(self):
        out = layer_normalize(f32([3, 3, 3]), f32([1, 1, 1]), f32([0, 0, 0]), 1e-5)
        np.testing.assert_allclose(out, [0, 0, 0], atol=1e-7)

    def test_unit_variance_pair(self):
        out = layer_normalize(f32([1, -1]), f32([1, 1]), f32([0, 0]), 0.0)
        np.testing.assert_allclose(out, [1, -1], atol=1e-6)

    def test_zero_gain_gives_bias(self):
        out = layer_normalize(f32([4, 7, -2]), f32([0, 0, 0]), f32([5, 5, 5]), 1e-5)
        np.testing.assert_allclose(out, [5, 5, 5], atol=1e-7)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            layer_normalize(f32([1, 2]), f32([1, 2, 3]), f32([1, 2, 3]), 1e-5)

    def test_standardizes_before_gain_bias(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            x = rng.normal(0, 3, size=32).astype(np.float32)
            out = layer_normalize(x, np.ones(32, np.float32), np.zeros(32, np.float32), 1e-9)
            assert abs(out.mean()) < 1e-4
            assert abs(np.mean(out.astype(np.float64) ** 2) - 1.0) < 1e-4
