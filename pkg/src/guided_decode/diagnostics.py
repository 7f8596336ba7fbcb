"""Per-step decode diagnostics: entropies, perturbation budgets, cache bounds.

One StepTrace is emitted per generated token. Traces serialize to JSONL
(one object per line) and optionally CSV, always in TRACE_FIELDS order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np

from .guidance import WeightVector

TRACE_FIELDS = (
    "step",
    "gamma_t",
    "entropy_cond",
    "entropy_uncond",
    "entropy_uncond_pert",
    "entropy_guided",
    "guidance_gap",
    "delta_context_norm",
    "perturbation_budget",
    "value_norm_max",
    "cache_perturbation_norm",
    "p_max_recorded",
    "sampled_token",
)


@dataclass
class StepTrace:
    step: int
    gamma_t: float
    entropy_cond: float
    entropy_uncond: float
    entropy_uncond_pert: float
    entropy_guided: float
    guidance_gap: float
    delta_context_norm: float
    perturbation_budget: float
    value_norm_max: float
    cache_perturbation_norm: float
    p_max_recorded: float
    sampled_token: int

    def to_json_line(self) -> str:
        d = asdict(self)
        return json.dumps({k: d[k] for k in TRACE_FIELDS})


def write_traces_jsonl(path, traces) -> None:
    with open(path, "w") as fh:
        for tr in traces:
            fh.write(tr.to_json_line())
            fh.write("\n")


def read_traces_jsonl(path) -> list[StepTrace]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(StepTrace(**json.loads(line)))
    return out


def write_traces_csv(path, traces) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for tr in traces:
            d = asdict(tr)
            writer.writerow([d[k] for k in TRACE_FIELDS])


def normalized_entropy(p: np.ndarray) -> float:
    """Shannon entropy over the distribution, divided by log(V).

    Natural log throughout; the normalization cancels the base. Zero
    probabilities contribute zero. Result lies in [0, 1]: 0 for a
    one-hot distribution, 1 for uniform.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.size < 2:
        raise ValueError("normalized entropy needs a vocabulary of at least 2")
    nz = p[p > 0.0]
    h = -float(np.sum(nz * np.log(nz)))
    return h / float(np.log(p.size))


def guidance_gap(entropy_base: float, entropy_pert: float) -> float:
    """Entropy gap between the perturbed and base branches."""
    return entropy_pert - entropy_base


@dataclass(frozen=True)
class CachePerturbationReport:
    per_token: np.ndarray  # (1 - w_hat_i) * ||v_i||, exact per position
    total: float
    bound_ok: bool | None  # total <= max ||v_i|| + tol; None if not checked

    BOUND_TOL = 1e-5


def cache_perturbation_report(
    value_norms,
    weights: WeightVector,
    check_bound: bool = True,
) -> CachePerturbationReport:
    """Per-token and total value-cache perturbation norms.

    The per-token norm is exact, not a bound: scaling v_i by w_hat_i
    shifts it by (w_hat_i - 1) v_i, whose norm is (1 - w_hat_i) ||v_i||.
    With step-normalized weights the total is guaranteed to stay within
    one token's worth of value norm, which is what check_bound verifies.
    """
    norms = np.asarray(value_norms, dtype=np.float64)
    if norms.size != len(weights):
        raise ValueError(
            f"got {norms.size} value norms for {len(weights)} weights"
        )
    if check_bound and not weights.normalized:
        raise ValueError("bound check requires step-normalized weights")
    per_token = (1.0 - weights.w) * norms
    total = float(per_token.sum())
    bound_ok = None
    if check_bound:
        vmax = float(norms.max()) if norms.size else 0.0
        bound_ok = total <= vmax + CachePerturbationReport.BOUND_TOL
    return CachePerturbationReport(per_token=per_token, total=total, bound_ok=bound_ok)
