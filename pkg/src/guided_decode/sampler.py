"""Token sampling with temperature, top-k, and nucleus filtering.

Randomness comes from splitmix64, a tiny 64-bit mixing generator with
published constants, so identical seeds give identical token sequences
on every platform and in every language that reimplements it. The
reference output sequence for seed 42 lives in docs/rng.md and is
pinned by a test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import softmax

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64: one 64-bit additive counter plus a finalizing mix.

    Constants are the standard ones (increment 0x9E3779B97F4A7C15,
    multipliers 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB).
    """

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 random mantissa bits."""
        return (self.next_u64() >> 11) * 2.0**-53


@dataclass(frozen=True)
class SamplerConfig:
    temperature: float = 1.0
    top_k: int | None = None
    top_p: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.top_p is not None and not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"top_p must be in (0, 1], got {self.top_p}")


def argmax(logits: np.ndarray) -> int:
    """Index of the largest logit; ties go to the lowest index."""
    z = np.asarray(logits)
    if z.size == 0:
        raise ValueError("argmax of an empty vector")
    return int(np.argmax(z))


def sample(logits: np.ndarray, cfg: SamplerConfig, rng: SplitMix64) -> int:
    """Draw one token id from temperature/top-k/top-p filtered logits.

    Temperature divides the logits first; top-k keeps the k largest
    (ties to the lower index), top-p keeps the shortest probability-sorted
    prefix whose cumulative mass reaches top_p. The draw is inverse-CDF
    over the renormalized kept probabilities, in sorted order, using a
    single uniform variate.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.size == 0:
        raise ValueError("sample from an empty logits vector")
    if not np.all(np.isfinite(z)):
        raise ValueError("sample requires finite logits")

    probs = softmax(z / cfg.temperature).astype(np.float64)
    order = np.argsort(-probs, kind="stable")  # stable => ties by lower index
    n = probs.size
    if cfg.top_k is not None:
        n = min(n, cfg.top_k)
    if cfg.top_p is not None:
        cum = np.cumsum(probs[order])
        n_p = int(np.searchsorted(cum, cfg.top_p, side="left")) + 1
        n = min(n, n_p, probs.size)

    kept = probs[order[:n]]
    kept = kept / kept.sum()
    u = rng.next_float()
    idx = int(np.searchsorted(np.cumsum(kept), u, side="right"))
    idx = min(idx, n - 1)  # guard against cumsum rounding just below 1.0
    return int(order[idx])
