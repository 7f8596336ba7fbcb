"""Grid-grammar dataset generation in the shared file format.

The constants here (4 classes, 16 tokens, 8x8 cells, 0.9 in-band mass)
are duplicated verbatim from the decode engine's scorer on purpose: the
two components share only file formats, and both sides pin the same
numbers in their tests.
"""

from __future__ import annotations

import numpy as np

N_CLASSES = 4
VOCAB_SIZE = 16
GRID_CELLS = 64
IN_BAND_PROB = 0.9
BAND_SIZE = VOCAB_SIZE // N_CLASSES


def band(class_id: int) -> np.ndarray:
    lo = class_id * BAND_SIZE
    return np.arange(lo, lo + BAND_SIZE)


def sample_grid(class_id: int, rng: np.random.Generator) -> np.ndarray:
    in_band = band(class_id)
    out_band = np.setdiff1d(np.arange(VOCAB_SIZE), in_band)
    pick_in = rng.random(GRID_CELLS) < IN_BAND_PROB
    return np.where(
        pick_in,
        in_band[rng.integers(0, BAND_SIZE, GRID_CELLS)],
        out_band[rng.integers(0, out_band.size, GRID_CELLS)],
    ).astype(np.int64)


def make_dataset(path, n: int, seed: int) -> None:
    """Write n grids, classes cycling, one per line: class,tok1,...,tok64."""
    if n < 1:
        raise ValueError("dataset size must be >= 1")
    rng = np.random.default_rng(seed)
    with open(path, "w") as fh:
        for i in range(n):
            cls = i % N_CLASSES
            tokens = sample_grid(cls, rng)
            fh.write(",".join(str(v) for v in [cls, *tokens]))
            fh.write("\n")


def load_dataset(path) -> tuple[np.ndarray, np.ndarray]:
    """Return (classes [N], grids [N, 64])."""
    classes, grids = [], []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            vals = [int(v) for v in line.strip().split(",")]
            classes.append(vals[0])
            grids.append(vals[1:])
    return np.asarray(classes, dtype=np.int64), np.asarray(grids, dtype=np.int64)
