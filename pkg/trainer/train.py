#!/usr/bin/env python3
"""Train the toy grid model with condition dropout and export a checkpoint.

Usage: train.py --config <file.json>

Condition dropout replaces each example's class token with the null
token at the configured rate, which is what gives the exported model a
usable condition-free branch. A rate of 0 is rejected: a model that has
never seen the null token produces garbage on the unconditional side,
and every guidance mode depends on that branch.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

sys.path.insert(0, str(Path(__file__).resolve().parent))

from checkpoint_export import export_checkpoint
from grid_dataset import load_dataset, make_dataset
from tiny_transformer import ArchConfig, TinyTransformer

ARCH_FIELDS = (
    "n_layers", "n_heads", "d_model", "d_ff", "vocab_size",
    "n_classes", "max_seq_len", "grid_rows", "grid_cols",
)


@dataclass(frozen=True)
class TrainConfig:
    arch: ArchConfig
    dataset_size: int = 20000
    epochs: int = 6
    batch_size: int = 128
    learning_rate: float = 3e-3
    condition_dropout: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.condition_dropout < 1.0:
            raise ValueError(
                "condition_dropout must be in (0, 1); without it the "
                "unconditional branch is never trained"
            )
        if self.dataset_size < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("dataset_size, epochs, batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.arch.d_model % self.arch.n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        if self.arch.grid_rows * self.arch.grid_cols != self.arch.max_seq_len - 1:
            raise ValueError("grid must fill max_seq_len - 1 positions")

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        with open(path) as fh:
            raw = json.load(fh)
        arch = ArchConfig(**{f: raw["model"][f] for f in ARCH_FIELDS})
        kwargs = {k: v for k, v in raw.items() if k != "model"}
        return cls(arch=arch, **kwargs)


def _batches(classes, grids, arch, cfg, generator):
    """Yield (inputs [B, 64], targets [B, 64]) with condition dropout."""
    n = classes.shape[0]
    perm = torch.randperm(n, generator=generator)
    cond = torch.as_tensor(classes) + arch.vocab_size
    toks = torch.as_tensor(grids)
    for start in range(0, n, cfg.batch_size):
        idx = perm[start:start + cfg.batch_size]
        c = cond[idx].clone()
        drop = torch.rand(c.shape[0], generator=generator) < cfg.condition_dropout
        c[drop] = arch.null_token
        seq = torch.cat([c[:, None], toks[idx]], dim=1)  # [B, 65]
        yield seq[:, :-1], toks[idx]


def train(cfg: TrainConfig, dataset_path, checkpoint_path) -> dict:
    """Next-token cross-entropy training; returns a small report."""
    torch.manual_seed(cfg.seed)
    generator = torch.Generator().manual_seed(cfg.seed)
    classes, grids = load_dataset(dataset_path)
    model = TinyTransformer(cfg.arch)
    opt = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)
    t0 = time.perf_counter()
    final_loss = float("nan")
    for epoch in range(cfg.epochs):
        losses = []
        for inputs, targets in _batches(classes, grids, cfg.arch, cfg, generator):
            logits = model(inputs)
            loss = torch.nn.functional.cross_entropy(
                logits.reshape(-1, cfg.arch.vocab_size), targets.reshape(-1)
            )
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(loss.item())
        final_loss = float(np.mean(losses))
        if not np.isfinite(final_loss):
            raise RuntimeError(f"training diverged at epoch {epoch}: loss {final_loss}")
        print(f"epoch {epoch + 1}/{cfg.epochs}  loss {final_loss:.4f}")
    export_checkpoint(checkpoint_path, cfg.arch, model)
    return {
        "final_loss": final_loss,
        "epochs": cfg.epochs,
        "wall_s": time.perf_counter() - t0,
        "checkpoint": str(checkpoint_path),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", required=True, help="TrainConfig JSON")
    parser.add_argument("--dataset", default=None,
                        help="dataset file; generated if absent")
    parser.add_argument("--out", default="model.scfg", help="checkpoint path")
    args = parser.parse_args(argv)
    try:
        cfg = TrainConfig.from_json(args.config)
        dataset = args.dataset or "grids_train.csv"
        if not Path(dataset).exists():
            print(f"generating {cfg.dataset_size} grids at {dataset}")
            make_dataset(dataset, cfg.dataset_size, cfg.seed)
        report = train(cfg, dataset, args.out)
        print(json.dumps(report, indent=2))
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
