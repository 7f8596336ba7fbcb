"""Guidance math over logits vectors.

Everything here is a pure function of plain arrays, so the combination
rules, confidence weighting, step normalization, and schedules can be
tested with mock logits and no transformer in sight.

The combined logits follow the convention

    z = (1 + gamma_t) * z_cond - gamma_t * z_other

so gamma_t = 0 is exactly the conditional branch, and the coefficients
sum to 1 (adding a constant to every logit never moves the argmax).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODES = ("none", "cfg", "softcfg")
SCHEDULES = ("constant", "cosine")
CONFIDENCE_SOURCES = ("conditional", "unconditional", "guided")
CONFIDENCE_STATS = ("max_prob", "sampled_token_prob")


@dataclass(frozen=True)
class GuidanceConfig:
    mode: str = "softcfg"
    gamma: float = 3.0
    schedule: str = "constant"
    k: float = 1.0
    step_norm: bool = True
    epsilon: float = 1e-8
    confidence_source: str = "conditional"
    confidence_stat: str = "max_prob"
    # sampling controls carried alongside so one config file can set a
    # whole decode; the sampler's own config is authoritative at draw time
    temperature: float = 1.0
    top_k: int | None = None
    top_p: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown guidance mode {self.mode!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.schedule == "cosine" and self.k <= 0:
            raise ValueError(f"cosine schedule needs k > 0, got {self.k}")
        if self.confidence_source not in CONFIDENCE_SOURCES:
            raise ValueError(f"unknown confidence_source {self.confidence_source!r}")
        if self.confidence_stat not in CONFIDENCE_STATS:
            raise ValueError(f"unknown confidence_stat {self.confidence_stat!r}")


@dataclass(frozen=True)
class WeightVector:
    """Per-token perturbation weights, one per generated position."""

    w: np.ndarray
    normalized: bool = False

    def __len__(self) -> int:
        return self.w.size

    @property
    def perturbation_mass(self) -> float:
        """Sum of (1 - w_i): the total perturbation applied this step."""
        return float(np.sum(1.0 - self.w))


def confidence_weights(confidences) -> WeightVector:
    """w_i = 1 - p_max(x_i), in recording order."""
    p = np.asarray(confidences, dtype=np.float64)
    if p.size and (p.min() < 0.0 or p.max() > 1.0):
        raise ValueError("confidences must lie in [0, 1]")
    return WeightVector(w=1.0 - p, normalized=False)


def step_normalize(weights: WeightVector, epsilon: float) -> WeightVector:
    """Rescale weights so the total perturbation mass is one unit.

    w_hat_i = 1 - (1 - w_i) / (sum_j (1 - w_j) + epsilon). The epsilon
    guard makes the all-ones input (zero mass) a no-op instead of a
    division by zero; the resulting budget is S / (S + epsilon).
    """
    if weights.normalized:
        raise ValueError("weights are already step-normalized")
    residual = 1.0 - weights.w
    denom = residual.sum() + epsilon
    return WeightVector(w=1.0 - residual / denom, normalized=True)


def combine_cfg(z_cond: np.ndarray, z_uncond: np.ndarray, gamma_t: float) -> np.ndarray:
    """(1 + gamma_t) * z_cond - gamma_t * z_uncond."""
    if z_cond.shape != z_uncond.shape:
        raise ValueError(f"logit shape mismatch: {z_cond.shape} vs {z_uncond.shape}")
    g = np.float32(gamma_t)
    return (np.float32(1.0) + g) * z_cond - g * z_uncond


def combine_softcfg(
    z_cond: np.ndarray, z_uncond_pert: np.ndarray, gamma_t: float
) -> np.ndarray:
    """Same affine combination with the perturbed unconditional branch."""
    return combine_cfg(z_cond, z_uncond_pert, gamma_t)


def delta_context(
    z_uncond_pert: np.ndarray, z_uncond: np.ndarray
) -> tuple[np.ndarray, float]:
    """Logit shift induced by the context perturbation, plus its L2 norm."""
    if z_uncond_pert.shape != z_uncond.shape:
        raise ValueError(
            f"logit shape mismatch: {z_uncond_pert.shape} vs {z_uncond.shape}"
        )
    diff = z_uncond_pert - z_uncond
    return diff, float(np.linalg.norm(diff.astype(np.float64)))


def cosine_gamma(t: int, total_steps: int, gamma: float, k: float) -> float:
    """gamma_t = (gamma - 1) * 0.5 * (1 - cos((t/T)^k * pi)).

    Ramps from 0 at t=0 to gamma-1 at t=T; larger k pushes guidance
    mass toward later steps. Monotone nondecreasing in t for any k > 0.
    """
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if not 0 <= t <= total_steps:
        raise ValueError(f"step {t} outside [0, {total_steps}]")
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    frac = (t / total_steps) ** k
    return (gamma - 1.0) * 0.5 * (1.0 - np.cos(frac * np.pi))


def gamma_at(t: int, total_steps: int, cfg: GuidanceConfig) -> float:
    """Guidance scale for step t under the configured schedule."""
    if cfg.schedule == "constant":
        return cfg.gamma
    return cosine_gamma(t, total_steps, cfg.gamma, cfg.k)


def extract_confidence(
    dist_cond: np.ndarray,
    dist_uncond: np.ndarray,
    dist_guided: np.ndarray,
    sampled: int,
    cfg: GuidanceConfig,
) -> float:
    """Confidence of the just-sampled token under the configured source."""
    source = {
        "conditional": dist_cond,
        "unconditional": dist_uncond,
        "guided": dist_guided,
    }[cfg.confidence_source]
    if cfg.confidence_stat == "max_prob":
        return float(np.max(source))
    return float(source[sampled])
