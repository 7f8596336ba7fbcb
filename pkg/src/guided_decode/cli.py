"""Command-line entry point: generate / sweep / diagnose / eval / inspect-weights.

Outputs are plot-ready files — grids in the dataset format, per-step
traces as JSONL, aggregates as CSV — never rendered images. Flags mirror
the GuidanceConfig and SamplerConfig field names; a JSON --config file
may set any of them, with explicit flags taking precedence.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import write_traces_jsonl
from .engine import SampleResult, generate_sample
from .grammar import GridGrammar, class_accuracy, read_grids, score_grid, write_grids
from .guidance import GuidanceConfig
from .model import ModelConfig, default_config
from .sampler import SamplerConfig
from .weights_io import (
    CheckpointFormatError,
    CheckpointValidationError,
    load_checkpoint,
    named_tensors,
    random_checkpoint,
)

DIAGNOSE_COLUMNS = (
    "step", "entropy_cond", "entropy_uncond", "entropy_uncond_pert",
    "guidance_gap", "delta_context_norm", "perturbation_budget",
)
SWEEP_COLUMNS = (
    "gamma", "k", "mode", "class_accuracy", "validity_rate",
    "mean_guided_entropy", "wall_ms",
)


@dataclass
class RunManifest:
    out_dir: str
    checkpoint: str | None = None
    weights_seed: int | None = None
    class_id: int | str = "all"
    samples_per_class: int = 4
    guidance: GuidanceConfig = dataclasses.field(default_factory=GuidanceConfig)
    sampler: SamplerConfig = dataclasses.field(default_factory=SamplerConfig)

    def __post_init__(self):
        if (self.checkpoint is None) == (self.weights_seed is None):
            raise ValueError("exactly one of checkpoint / weights_seed must be set")
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")


def resolve_model(manifest: RunManifest):
    if manifest.checkpoint is not None:
        return load_checkpoint(manifest.checkpoint)
    config = default_config()
    return config, random_checkpoint(config, manifest.weights_seed)


def grammar_for(config: ModelConfig) -> GridGrammar:
    return GridGrammar(
        n_classes=config.n_classes, vocab_size=config.vocab_size,
        grid_rows=config.grid_rows, grid_cols=config.grid_cols,
    )


def _worker_count(n_jobs: int) -> int:
    cap = int(os.environ.get("GUIDED_DECODE_THREADS", "1"))
    return max(1, min(cap, n_jobs))


def run_samples(
    config: ModelConfig,
    params,
    manifest: RunManifest,
    guidance: GuidanceConfig | None = None,
    confidence_override: float | None = None,
) -> list[SampleResult]:
    """Run every (class, sample) job; results are returned in job order
    regardless of worker count, with RNG sub-seeds seed + job index."""
    guidance = guidance or manifest.guidance
    if manifest.class_id == "all":
        classes = list(range(config.n_classes))
    else:
        classes = [int(manifest.class_id)]
    jobs = [
        (cls, idx) for cls in classes for idx in range(manifest.samples_per_class)
    ]

    def run(job_index: int) -> SampleResult:
        cls, _ = jobs[job_index]
        sub = dataclasses.replace(manifest.sampler, seed=manifest.sampler.seed + job_index)
        return generate_sample(
            config, params, cls, guidance, sub,
            confidence_override=confidence_override,
        )

    workers = _worker_count(len(jobs))
    if workers == 1:
        return [run(i) for i in range(len(jobs))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(jobs))))


def _metrics(results: list[SampleResult], grammar: GridGrammar) -> dict:
    scored = [score_grid(r.tokens, r.class_id, grammar) for r in results]
    acc = sum(s.predicted_class == r.class_id for s, r in zip(scored, results))
    all_traces = [tr for r in results for tr in r.traces]
    return {
        "n_samples": len(results),
        "class_accuracy": acc / len(results),
        "validity_rate": sum(s.valid for s in scored) / len(results),
        "mean_entropy_cond": float(np.mean([t.entropy_cond for t in all_traces])),
        "mean_entropy_uncond": float(np.mean([t.entropy_uncond for t in all_traces])),
        "mean_entropy_guided": float(np.mean([t.entropy_guided for t in all_traces])),
        "mean_delta_context_norm": float(
            np.mean([t.delta_context_norm for t in all_traces])
        ),
        "wall_ms_per_grid": float(np.mean([r.wall_ms for r in results])),
    }


def cmd_generate(manifest: RunManifest) -> dict:
    """Run the decode loop for every sample; write grids, traces, summary."""
    config, params = resolve_model(manifest)
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    results = run_samples(config, params, manifest)
    wall_ms = (time.perf_counter() - t0) * 1e3

    write_grids(out / "grids.csv", [(r.class_id, r.tokens) for r in results])
    write_traces_jsonl(out / "traces.jsonl", [tr for r in results for tr in r.traces])
    summary = _metrics(results, grammar_for(config))
    summary["wall_ms_total"] = wall_ms
    summary["mode"] = manifest.guidance.mode
    summary["gamma"] = manifest.guidance.gamma
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary


def cmd_sweep(manifest: RunManifest, gammas: list[float], ks: list[float]) -> list[dict]:
    """Evaluate the gamma x k product, one row per cell, fixed seed per cell."""
    if not gammas or not ks:
        raise ValueError("sweep needs nonempty gamma and k lists")
    config, params = resolve_model(manifest)
    grammar = grammar_for(config)
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for gamma in gammas:
        for k in ks:
            guidance = dataclasses.replace(manifest.guidance, gamma=gamma, k=k)
            t0 = time.perf_counter()
            results = run_samples(config, params, manifest, guidance=guidance)
            cell_ms = (time.perf_counter() - t0) * 1e3
            metrics = _metrics(results, grammar)
            rows.append({
                "gamma": gamma, "k": k, "mode": guidance.mode,
                "class_accuracy": metrics["class_accuracy"],
                "validity_rate": metrics["validity_rate"],
                "mean_guided_entropy": metrics["mean_entropy_guided"],
                "wall_ms": cell_ms,
            })
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return rows


def cmd_diagnose(manifest: RunManifest) -> list[dict]:
    """Per-step means across samples of the entropy/perturbation traces."""
    config, params = resolve_model(manifest)
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = run_samples(config, params, manifest)
    rows = []
    for t in range(1, config.n_steps + 1):
        at_t = [r.traces[t - 1] for r in results]
        rows.append({
            "step": t,
            "entropy_cond": float(np.mean([tr.entropy_cond for tr in at_t])),
            "entropy_uncond": float(np.mean([tr.entropy_uncond for tr in at_t])),
            "entropy_uncond_pert": float(
                np.mean([tr.entropy_uncond_pert for tr in at_t])
            ),
            "guidance_gap": float(np.mean([tr.guidance_gap for tr in at_t])),
            "delta_context_norm": float(
                np.mean([tr.delta_context_norm for tr in at_t])
            ),
            "perturbation_budget": float(
                np.mean([tr.perturbation_budget for tr in at_t])
            ),
        })
    with open(out / "diagnose.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=DIAGNOSE_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return rows


def cmd_eval(grids_path: str, grammar: GridGrammar = GridGrammar()) -> dict:
    """Score an existing grids file against its own class labels."""
    rows = read_grids(grids_path)
    if not rows:
        raise ValueError(f"no grids found in {grids_path}")
    scored = [score_grid(tokens, cls, grammar) for cls, tokens in rows]
    return {
        "n_grids": len(rows),
        "class_accuracy": class_accuracy(
            [(tokens, cls) for cls, tokens in rows], grammar
        ),
        "validity_rate": sum(s.valid for s in scored) / len(rows),
        "mean_band_fraction": float(np.mean([s.band_fraction for s in scored])),
    }


def cmd_inspect(checkpoint_path: str) -> dict:
    """Validate a checkpoint and summarize its tensors."""
    config, params = load_checkpoint(checkpoint_path)
    tensors = []
    for name, arr in named_tensors(config, params):
        tensors.append({
            "name": name, "shape": list(arr.shape),
            "min": float(arr.min()), "max": float(arr.max()),
            "mean": float(arr.mean()),
        })
    return {"config": dataclasses.asdict(config), "tensors": tensors}


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--checkpoint", type=str, default=None,
                   help="checkpoint file; omit to use --weights-seed")
    p.add_argument("--weights-seed", type=int, default=None,
                   help="random-init seed for the default architecture")
    p.add_argument("--class-id", type=str, default="all",
                   help="class id or 'all'")
    p.add_argument("--samples", type=int, default=4, help="samples per class")
    p.add_argument("--mode", type=str, default="softcfg",
                   choices=["none", "cfg", "softcfg"])
    p.add_argument("--gamma", type=float, default=3.0)
    p.add_argument("--schedule", type=str, default="constant",
                   choices=["constant", "cosine"])
    p.add_argument("--k", type=float, default=1.0, help="cosine schedule exponent")
    p.add_argument("--step-norm", dest="step_norm", action="store_true", default=True)
    p.add_argument("--no-step-norm", dest="step_norm", action="store_false")
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--confidence-source", type=str, default="conditional",
                   choices=["conditional", "unconditional", "guided"])
    p.add_argument("--confidence-stat", type=str, default="max_prob",
                   choices=["max_prob", "sampled_token_prob"])
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--top-p", type=float, default=None)
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.add_argument("--out", type=str, default="out", help="output directory")
    p.add_argument("--config", type=str, default=None,
                   help="JSON file of these options; flags override")


def _manifest_from_args(args: argparse.Namespace) -> RunManifest:
    checkpoint = args.checkpoint
    weights_seed = args.weights_seed
    if checkpoint is None and weights_seed is None:
        weights_seed = 42
    class_id = args.class_id if args.class_id == "all" else int(args.class_id)
    guidance = GuidanceConfig(
        mode=args.mode, gamma=args.gamma, schedule=args.schedule, k=args.k,
        step_norm=args.step_norm, epsilon=args.epsilon,
        confidence_source=args.confidence_source,
        confidence_stat=args.confidence_stat,
        temperature=args.temperature, top_k=args.top_k, top_p=args.top_p,
    )
    sampler = SamplerConfig(
        temperature=args.temperature, top_k=args.top_k, top_p=args.top_p,
        seed=args.seed,
    )
    return RunManifest(
        out_dir=args.out, checkpoint=checkpoint, weights_seed=weights_seed,
        class_id=class_id, samples_per_class=args.samples,
        guidance=guidance, sampler=sampler,
    )


def _parse_float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="guided-decode")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="run the decode loop, write grids/traces")
    _add_model_args(p_gen)

    p_sweep = sub.add_parser("sweep", help="gamma x k grid, one CSV row per cell")
    _add_model_args(p_sweep)
    p_sweep.add_argument("--gamma-list", type=str, required=True,
                         help="comma-separated gamma values")
    p_sweep.add_argument("--k-list", type=str, required=True,
                         help="comma-separated k values")

    p_diag = sub.add_parser("diagnose", help="per-step entropy trend CSV")
    _add_model_args(p_diag)

    p_eval = sub.add_parser("eval", help="score an existing grids file")
    p_eval.add_argument("--grids", type=str, required=True)

    p_insp = sub.add_parser("inspect-weights", help="validate and summarize a checkpoint")
    p_insp.add_argument("--checkpoint", type=str, required=True)
    subs = {"generate": p_gen, "sweep": p_sweep, "diagnose": p_diag,
            "eval": p_eval, "inspect-weights": p_insp}
    return parser, subs


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in ("generate", "sweep", "diagnose"):
            if getattr(args, "config", None) is not None:
                sub = subs[args.command]
                with open(args.config) as fh:
                    overrides = json.load(fh)
                known = {a.dest for a in sub._actions}
                bad = set(overrides) - known
                if bad:
                    raise ValueError(f"unknown config keys: {sorted(bad)}")
                sub.set_defaults(**overrides)
                args = parser.parse_args(argv)  # explicit flags still win
            manifest = _manifest_from_args(args)
            if args.command == "generate":
                summary = cmd_generate(manifest)
                print(json.dumps(summary, indent=2))
            elif args.command == "sweep":
                rows = cmd_sweep(manifest, _parse_float_list(args.gamma_list),
                                 _parse_float_list(args.k_list))
                print(f"wrote {len(rows)} sweep rows to {manifest.out_dir}/sweep.csv")
            else:
                rows = cmd_diagnose(manifest)
                print(f"wrote {len(rows)} diagnose rows to {manifest.out_dir}/diagnose.csv")
        elif args.command == "eval":
            print(json.dumps(cmd_eval(args.grids), indent=2))
        elif args.command == "inspect-weights":
            report = cmd_inspect(args.checkpoint)
            print(json.dumps(report["config"], indent=2))
            for t in report["tensors"]:
                dims = "x".join(str(s) for s in t["shape"])
                print(f"{t['name']:24s} {dims:>10s}  "
                      f"min {t['min']:+.4f}  max {t['max']:+.4f}  mean {t['mean']:+.5f}")
    except (CheckpointFormatError, CheckpointValidationError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
