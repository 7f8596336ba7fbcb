"""Checkpoint writer implementing the documented SCFG1 format.

Written against docs/checkpoint-format.md, independently of the decode
engine's own loader.
"""

from __future__ import annotations

import numpy as np

from tiny_transformer import ArchConfig, TinyTransformer

MAGIC = "SCFG1"

CONFIG_FIELDS = (
    "n_layers", "n_heads", "d_model", "d_ff", "vocab_size",
    "n_classes", "max_seq_len", "grid_rows", "grid_cols",
)


def tensor_order(model: TinyTransformer):
    yield "tok_emb", model.tok_emb
    yield "pos_emb", model.pos_emb
    for i, block in enumerate(model.blocks):
        prefix = f"layers.{i}."
        for field in ("w_q", "w_k", "w_v", "w_o", "ln1_g", "ln1_b",
                      "w1", "b1", "w2", "b2", "ln2_g", "ln2_b"):
            yield prefix + field, getattr(block, field)
    yield "ln_f_g", model.ln_f_g
    yield "ln_f_b", model.ln_f_b
    yield "w_unembed", model.w_unembed


def export_checkpoint(path, config: ArchConfig, model: TinyTransformer) -> None:
    lines = [MAGIC, "version=1"]
    lines += [f"config.{f}={getattr(config, f)}" for f in CONFIG_FIELDS]
    chunks = []
    offset = 0
    for name, param in tensor_order(model):
        arr = np.ascontiguousarray(param.detach().cpu().numpy(), dtype="<f4")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"refusing to export non-finite tensor {name}")
        dims = "x".join(str(s) for s in arr.shape)
        lines.append(f"tensor={name} shape={dims} offset={offset}")
        chunks.append(arr.tobytes())
        offset += arr.nbytes
    lines.append("end")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        for chunk in chunks:
            fh.write(chunk)
