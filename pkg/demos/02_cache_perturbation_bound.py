#!/usr/bin/env python3
"""The value-cache deviation bound, demonstrated on live caches.

Scaling cached value vector v_i by w_hat_i shifts the cache by exactly
(1 - w_hat_i) ||v_i|| per token. With step normalization those factors
sum to one unit, so the total shift can never exceed the largest single
value norm. Without it, the shift grows with every confident token.
"""

import numpy as np

from guided_decode import (
    BranchCache,
    cache_perturbation_report,
    confidence_weights,
    default_config,
    forward_step,
    random_checkpoint,
    record_confidence,
    step_normalize,
)

config = default_config()
params = random_checkpoint(config, 42)
rng = np.random.default_rng(0)

cache = BranchCache.empty(config)
forward_step(cache, config.vocab_size + config.n_classes, params)  # null slot
for _ in range(40):
    forward_step(cache, int(rng.integers(0, 16)), params)
    record_confidence(cache, float(rng.uniform(0.7, 0.99)))  # confident run

norms = cache.value_norms()[1:]
weights = confidence_weights(cache.confidences)
print(f"cached generated tokens : {len(norms)}")
print(f"max value norm          : {norms.max():.5f}")

raw = cache_perturbation_report(norms, weights, check_bound=False)
print(f"\nraw perturbation total  : {raw.total:.5f}"
      f"  ({raw.total / norms.max():.1f}x the max norm)")
print("unbounded: every confident token adds its own slice.")

normalized = step_normalize(weights, 1e-8)
rep = cache_perturbation_report(norms, normalized)
print(f"\nnormalized total        : {rep.total:.5f}")
print(f"bound total <= max norm : {rep.bound_ok}")
print("\nper-token shift (first 8):")
for i in range(8):
    print(f"  token {i + 1}: (1 - {normalized.w[i]:.4f}) * {norms[i]:.5f}"
          f" = {rep.per_token[i]:.6f}")
