"""Dense float32 numerics for the decoder forward pass.

Matrices are 2-D C-order (row-major) float32 ndarrays. All results are
stored as float32; softmax and layer norm accept any array and operate
along the last axis, so the same routines serve logits vectors and
batched hidden-state rows.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

DTYPE = np.float32


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of two 2-D float32 matrices."""
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul expects 2-D operands, got {a.ndim}-D and {b.ndim}-D")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    return np.asarray(a @ b, dtype=DTYPE)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-shifted softmax along the last axis.

    Shift invariance and the max-shift keep large guided logits from
    overflowing; output entries sum to 1 within float32 rounding.
    """
    z = np.asarray(logits, dtype=DTYPE)
    if z.size == 0 or z.shape[-1] == 0:
        raise ValueError("softmax of an empty vector")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted, dtype=DTYPE)
    return np.asarray(e / e.sum(axis=-1, keepdims=True), dtype=DTYPE)


def layer_normalize(
    x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float
) -> np.ndarray:
    """(x - mean) / sqrt(var + eps) * gain + bias along the last axis.

    Uses population variance (divide by length, not length-1).
    """
    x = np.asarray(x, dtype=DTYPE)
    gain = np.asarray(gain, dtype=DTYPE)
    bias = np.asarray(bias, dtype=DTYPE)
    if x.shape[-1] != gain.shape[-1] or gain.shape != bias.shape:
        raise ValueError(
            f"layer_normalize length mismatch: x {x.shape}, gain {gain.shape}, bias {bias.shape}"
        )
    mean = x.mean(axis=-1, keepdims=True, dtype=DTYPE)
    centered = x - mean
    var = np.mean(centered * centered, axis=-1, keepdims=True, dtype=DTYPE)
    normed = centered / np.sqrt(var + DTYPE(eps))
    return np.asarray(normed * gain + bias, dtype=DTYPE)


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact (erf-based) GELU, float32 in and out."""
    x = np.asarray(x, dtype=DTYPE)
    return np.asarray(0.5 * x * (1.0 + erf(x / np.sqrt(2.0))), dtype=DTYPE)
