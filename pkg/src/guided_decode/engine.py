"""The guided decode loop.

One step generates one image token: the conditional branch consumes the
previous token, the unconditional branch consumes the same token with
its cached values optionally down-weighted by the recorded confidences
of the tokens already in its cache, the two branches combine under the
scheduled guidance scale, and one token is drawn. Both caches advance
with clean (unperturbed) keys and values; the confidence of each token
is recorded once, when the token enters the caches, and never
recomputed.

The condition slot (position 0, class or null token) is never scaled.
At the first step the perturbation context is empty, so every mode
produces exactly the plain dual-branch combination.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .diagnostics import StepTrace, guidance_gap, normalized_entropy
from .guidance import (
    GuidanceConfig,
    combine_cfg,
    combine_softcfg,
    confidence_weights,
    delta_context,
    extract_confidence,
    gamma_at,
    step_normalize,
)
from .model import (
    BranchCache,
    ModelConfig,
    ModelParams,
    VocabLayout,
    _forward,
    forward_step,
    record_confidence,
)
from .sampler import SamplerConfig, SplitMix64, sample
from .tensor import softmax


@dataclass
class SampleResult:
    class_id: int
    tokens: list[int]
    traces: list[StepTrace]
    wall_ms: float


def generate_sample(
    config: ModelConfig,
    params: ModelParams,
    class_id: int,
    guidance: GuidanceConfig,
    sampler: SamplerConfig,
    confidence_override: float | None = None,
) -> SampleResult:
    """Generate one full grid; confidence_override pins every recorded
    confidence to a fixed value (test hook for the reduction chain)."""
    t0 = time.perf_counter()
    layout = VocabLayout.from_config(config)
    cond = BranchCache.empty(config)
    uncond = BranchCache.empty(config)
    rng = SplitMix64(sampler.seed)
    total = config.n_steps
    softcfg = guidance.mode == "softcfg"

    prev_cond = layout.class_token(class_id)
    prev_uncond = layout.null_token
    pending_conf: float | None = None
    tokens: list[int] = []
    traces: list[StepTrace] = []

    for t in range(1, total + 1):
        z_cond = forward_step(cond, prev_cond, params)
        if pending_conf is not None:
            record_confidence(cond, pending_conf)

        norms = uncond.value_norms()[1:]  # cached generated positions only
        budget = 0.0
        cache_norm = 0.0
        if softcfg:
            weights = confidence_weights(uncond.confidences)
            applied = (
                step_normalize(weights, guidance.epsilon)
                if guidance.step_norm
                else weights
            )
            budget = applied.perturbation_mass
            cache_norm = float((1.0 - applied.w) @ norms)
            if budget == 0.0:
                scale = None  # exact CFG step, bitwise
            else:
                scale = np.ones(uncond.length, dtype=np.float32)
                scale[1:] = applied.w  # position 0 (condition slot) stays at 1
            z_uncond, z_pert = _forward(uncond, prev_uncond, params, scale)
        else:
            z_uncond = forward_step(uncond, prev_uncond, params)
            z_pert = z_uncond
        if pending_conf is not None:
            record_confidence(uncond, pending_conf)

        gamma_t = gamma_at(t, total, guidance)
        if guidance.mode == "none":
            z = z_cond
        elif guidance.mode == "cfg":
            z = combine_cfg(z_cond, z_uncond, gamma_t)
        else:
            z = combine_softcfg(z_cond, z_pert, gamma_t)

        token = sample(z, sampler, rng)

        dist_cond = softmax(z_cond)
        dist_uncond = softmax(z_uncond)
        dist_pert = softmax(z_pert)
        dist_guided = softmax(z)
        conf = extract_confidence(dist_cond, dist_uncond, dist_guided, token, guidance)
        if confidence_override is not None:
            conf = confidence_override

        _, dnorm = delta_context(z_pert, z_uncond)
        e_cond = normalized_entropy(dist_cond)
        e_uncond = normalized_entropy(dist_uncond)

        traces.append(StepTrace(
            step=t,
            gamma_t=float(gamma_t),
            entropy_cond=e_cond,
            entropy_uncond=e_uncond,
            entropy_uncond_pert=normalized_entropy(dist_pert),
            entropy_guided=normalized_entropy(dist_guided),
            guidance_gap=guidance_gap(e_cond, e_uncond),
            delta_context_norm=dnorm,
            perturbation_budget=budget,
            value_norm_max=float(norms.max()) if norms.size else 0.0,
            cache_perturbation_norm=cache_norm,
            p_max_recorded=conf,
            sampled_token=token,
        ))
        tokens.append(token)
        pending_conf = conf
        prev_cond = prev_uncond = token

    wall_ms = (time.perf_counter() - t0) * 1e3
    return SampleResult(class_id=class_id, tokens=tokens, traces=traces, wall_ms=wall_ms)
