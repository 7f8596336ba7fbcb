"""Checkpoint format: text manifest plus raw float32 payload, one file.

The header is human-readable so a checkpoint can be inspected (or
produced by another language) with nothing but a hex dump; the payload
is little-endian float32, row-major, tensors in manifest order. The
byte-exact layout is documented in docs/checkpoint-format.md.
"""

from __future__ import annotations

import numpy as np

from .model import LayerParams, ModelConfig, ModelParams, VocabLayout
from .sampler import SplitMix64

MAGIC = "SCFG1"
FORMAT_VERSION = 1

CONFIG_FIELDS = (
    "n_layers", "n_heads", "d_model", "d_ff", "vocab_size",
    "n_classes", "max_seq_len", "grid_rows", "grid_cols",
)

_BIAS_SUFFIXES = ("ln1_b", "ln2_b", "b1", "b2", "ln_f_b")


class CheckpointFormatError(ValueError):
    """The file is not a checkpoint (bad magic, mangled header)."""


class CheckpointValidationError(ValueError):
    """The file parses but its contents are inconsistent or corrupt."""


def expected_tensors(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Canonical (name, shape) list defining manifest and payload order."""
    d, dff = config.d_model, config.d_ff
    layout = VocabLayout.from_config(config)
    out = [
        ("tok_emb", (layout.total_vocab, d)),
        ("pos_emb", (config.max_seq_len, d)),
    ]
    for i in range(config.n_layers):
        p = f"layers.{i}."
        out += [
            (p + "w_q", (d, d)), (p + "w_k", (d, d)),
            (p + "w_v", (d, d)), (p + "w_o", (d, d)),
            (p + "ln1_g", (d,)), (p + "ln1_b", (d,)),
            (p + "w1", (d, dff)), (p + "b1", (dff,)),
            (p + "w2", (dff, d)), (p + "b2", (d,)),
            (p + "ln2_g", (d,)), (p + "ln2_b", (d,)),
        ]
    out += [
        ("ln_f_g", (d,)), ("ln_f_b", (d,)),
        ("w_unembed", (d, config.vocab_size)),
    ]
    return out


def named_tensors(config: ModelConfig, params: ModelParams):
    """Yield (name, array) pairs in canonical order."""
    flat = {"tok_emb": params.tok_emb, "pos_emb": params.pos_emb,
            "ln_f_g": params.ln_f_g, "ln_f_b": params.ln_f_b,
            "w_unembed": params.w_unembed}
    for i, lp in enumerate(params.layers):
        for fname in ("w_q", "w_k", "w_v", "w_o", "ln1_g", "ln1_b",
                      "w1", "b1", "w2", "b2", "ln2_g", "ln2_b"):
            flat[f"layers.{i}.{fname}"] = getattr(lp, fname)
    for name, _ in expected_tensors(config):
        yield name, flat[name]


def _params_from_dict(config: ModelConfig, tensors: dict[str, np.ndarray]) -> ModelParams:
    layers = []
    for i in range(config.n_layers):
        p = f"layers.{i}."
        layers.append(LayerParams(**{
            fname: tensors[p + fname]
            for fname in ("w_q", "w_k", "w_v", "w_o", "ln1_g", "ln1_b",
                          "w1", "b1", "w2", "b2", "ln2_g", "ln2_b")
        }))
    return ModelParams(
        tok_emb=tensors["tok_emb"], pos_emb=tensors["pos_emb"], layers=layers,
        ln_f_g=tensors["ln_f_g"], ln_f_b=tensors["ln_f_b"],
        w_unembed=tensors["w_unembed"],
    )


def save_checkpoint(path, config: ModelConfig, params: ModelParams) -> None:
    spec = expected_tensors(config)
    arrays = dict(named_tensors(config, params))
    lines = [MAGIC, f"version={FORMAT_VERSION}"]
    lines += [f"config.{f}={getattr(config, f)}" for f in CONFIG_FIELDS]
    offset = 0
    payload = []
    for name, shape in spec:
        arr = np.ascontiguousarray(arrays[name], dtype="<f4")
        if arr.shape != shape:
            raise CheckpointValidationError(
                f"tensor {name}: shape {arr.shape} does not match expected {shape}"
            )
        dims = "x".join(str(s) for s in shape)
        lines.append(f"tensor={name} shape={dims} offset={offset}")
        payload.append(arr.tobytes())
        offset += arr.nbytes
    lines.append("end")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        for chunk in payload:
            fh.write(chunk)


def load_checkpoint(path) -> tuple[ModelConfig, ModelParams]:
    """Parse, validate, and load a checkpoint; rejects non-finite tensors."""
    with open(path, "rb") as fh:
        blob = fh.read()

    marker = b"\nend\n"
    head_end = blob.find(marker)
    if not blob.startswith((MAGIC + "\n").encode("ascii")):
        raise CheckpointFormatError(f"bad magic: expected {MAGIC!r}")
    if head_end < 0:
        raise CheckpointFormatError("unterminated manifest (missing 'end' line)")
    header = blob[:head_end].decode("ascii").split("\n")
    payload = blob[head_end + len(marker):]

    fields: dict[str, int] = {}
    manifest: list[tuple[str, tuple[int, ...], int]] = []
    for line in header[1:]:
        key, _, value = line.partition("=")
        if key == "version":
            if int(value) != FORMAT_VERSION:
                raise CheckpointFormatError(f"unsupported format version {value}")
        elif key.startswith("config."):
            fields[key[len("config."):]] = int(value)
        elif key == "tensor":
            name, shape_part, offset_part = value.split(" ")
            shape = tuple(int(s) for s in shape_part.split("=")[1].split("x"))
            manifest.append((name, shape, int(offset_part.split("=")[1])))
        else:
            raise CheckpointFormatError(f"unrecognized manifest line: {line!r}")

    missing = [f for f in CONFIG_FIELDS if f not in fields]
    if missing:
        raise CheckpointFormatError(f"manifest missing config fields: {missing}")
    config = ModelConfig(**{f: fields[f] for f in CONFIG_FIELDS})

    expected = expected_tensors(config)
    if [m[0] for m in manifest] != [e[0] for e in expected]:
        raise CheckpointValidationError(
            "manifest tensor list does not match the architecture "
            f"(got {[m[0] for m in manifest]})"
        )
    tensors: dict[str, np.ndarray] = {}
    offset = 0
    for (name, shape, declared), (_, want_shape) in zip(manifest, expected):
        if shape != want_shape:
            raise CheckpointValidationError(
                f"tensor {name}: shape {shape} does not match expected {want_shape}"
            )
        if declared != offset:
            raise CheckpointValidationError(
                f"tensor {name}: offset {declared} != running offset {offset}"
            )
        nbytes = int(np.prod(shape)) * 4
        if offset + nbytes > len(payload):
            raise CheckpointValidationError(
                f"payload truncated: tensor {name} is missing or incomplete"
            )
        arr = np.frombuffer(payload, dtype="<f4", count=int(np.prod(shape)),
                            offset=offset).reshape(shape).copy()
        if not np.all(np.isfinite(arr)):
            raise CheckpointValidationError(f"tensor {name} contains NaN or Inf")
        tensors[name] = arr
        offset += nbytes
    if offset != len(payload):
        raise CheckpointValidationError(
            f"payload has {len(payload) - offset} trailing bytes"
        )
    return config, _params_from_dict(config, tensors)


def random_checkpoint(config: ModelConfig, seed: int) -> ModelParams:
    """Deterministic random initialization: weights uniform in
    [-0.05, 0.05], biases zero, drawn from splitmix64 in manifest order."""
    rng = SplitMix64(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in expected_tensors(config):
        n = int(np.prod(shape))
        if name.endswith(_BIAS_SUFFIXES):
            arr = np.zeros(n, dtype=np.float32)
        else:
            arr = np.empty(n, dtype=np.float32)
            for i in range(n):
                arr[i] = (rng.next_float() - 0.5) * 0.1
        tensors[name] = arr.reshape(shape)
    return _params_from_dict(config, tensors)
