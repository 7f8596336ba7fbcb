#!/usr/bin/env python3
"""Checkpoint format walkthrough: write, inspect, validate, reject."""

import tempfile
from pathlib import Path

from guided_decode import (
    CheckpointValidationError,
    default_config,
    load_checkpoint,
    random_checkpoint,
    save_checkpoint,
)

config = default_config()
params = random_checkpoint(config, seed=42)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "model.scfg"
    save_checkpoint(path, config, params)
    blob = path.read_bytes()
    header = blob.split(b"\nend\n")[0].decode()

    print(f"file size: {len(blob)} bytes")
    print("manifest (first 16 lines):")
    for line in header.splitlines()[:16]:
        print(f"  {line}")

    loaded_config, loaded = load_checkpoint(path)
    print(f"\nround trip ok: config == original -> {loaded_config == config}")

    truncated = Path(tmp) / "cut.scfg"
    truncated.write_bytes(blob[: len(blob) - 1000])
    try:
        load_checkpoint(truncated)
    except CheckpointValidationError as exc:
        print(f"truncated file rejected: {exc}")

    tampered = Path(tmp) / "tampered.scfg"
    tampered.write_bytes(blob.replace(b"config.d_model=32", b"config.d_model=16"))
    try:
        load_checkpoint(tampered)
    except CheckpointValidationError as exc:
        print(f"inconsistent manifest rejected: {exc}")

print("\nsee docs/checkpoint-format.md for the byte-exact layout.")
