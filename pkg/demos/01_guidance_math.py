#!/usr/bin/env python3
"""Tour of the guidance arithmetic on mock logits: no model involved.

Covers confidence weighting, step normalization and its unit budget,
the combination rule, and the cosine schedule.
"""

import numpy as np

from guided_decode import (
    combine_cfg,
    combine_softcfg,
    confidence_weights,
    cosine_gamma,
    delta_context,
    step_normalize,
)

print("=== confidence weights: w_i = 1 - p_max(x_i) ===")
confidences = [0.2, 0.5, 0.8, 0.97]
weights = confidence_weights(confidences)
print(f"recorded p_max : {confidences}")
print(f"raw weights    : {weights.w}")
print("high-confidence tokens get small weights, i.e. strong value-cache")
print("perturbation on the condition-free branch.\n")

print("=== step normalization: total perturbation pinned to one unit ===")
normalized = step_normalize(weights, epsilon=1e-8)
print(f"normalized     : {np.round(normalized.w, 4)}")
print(f"raw mass       : {weights.perturbation_mass:.4f}")
print(f"pinned mass    : {normalized.perturbation_mass:.6f} (= S/(S+eps))")

long_run = confidence_weights([0.9] * 50)
print(f"50 confident tokens raw mass  : {long_run.perturbation_mass:.1f}")
print(f"  ... after step normalization: "
      f"{step_normalize(long_run, 1e-8).perturbation_mass:.6f}")
print("without normalization the mass grows with sequence length;")
print("with it, the condition-free branch never loses more than one")
print("token's worth of context in a single step.\n")

print("=== combination rule: z = (1+g) z_cond - g z_other ===")
z_cond = np.array([2.0, 0.0, -1.0], dtype=np.float32)
z_uncond = np.array([1.0, 1.0, 0.5], dtype=np.float32)
for gamma in (0.0, 1.0, 3.0):
    print(f"gamma={gamma:>3}: cfg     -> {combine_cfg(z_cond, z_uncond, gamma)}")
z_pert = np.array([0.8, 1.3, 0.4], dtype=np.float32)
print(f"gamma=3.0: softcfg -> {combine_softcfg(z_cond, z_pert, 3.0)}")
diff, norm = delta_context(z_pert, z_uncond)
print(f"context shift {diff}, |shift| = {norm:.4f}\n")

print("=== cosine schedule: gamma_t ramps from 0 to gamma-1 ===")
for k in (0.5, 1.0, 2.0):
    row = [cosine_gamma(t, 64, 13.0, k) for t in (0, 16, 32, 48, 64)]
    print(f"k={k}: " + "  ".join(f"{v:6.2f}" for v in row))
print("larger k pushes guidance mass toward late steps.")
