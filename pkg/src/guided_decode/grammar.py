"""Synthetic class-conditional grid language and its exact scorer.

Each of the 4 classes owns a contiguous band of 4 of the 16 image
tokens. A grid cell drawn from class c lands in c's band with
probability 0.9, otherwise uniformly on the 12 out-of-band tokens.
Scoring is rule-based: majority band predicts the class, and a grid is
valid when at least 60% of its cells sit in the conditioned band. The
constants here are shared verbatim with the trainer's dataset
generator; the two components must agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridGrammar:
    n_classes: int = 4
    vocab_size: int = 16
    grid_rows: int = 8
    grid_cols: int = 8
    in_band_prob: float = 0.9
    valid_threshold: float = 0.6

    @property
    def n_cells(self) -> int:
        return self.grid_rows * self.grid_cols

    @property
    def band_size(self) -> int:
        return self.vocab_size // self.n_classes

    def band(self, class_id: int) -> range:
        """Token ids owned by a class."""
        lo = class_id * self.band_size
        return range(lo, lo + self.band_size)

    def token_class(self, token: int) -> int:
        return token // self.band_size


@dataclass(frozen=True)
class GridScore:
    predicted_class: int
    band_fraction: float
    valid: bool


def score_grid(tokens, condition: int, grammar: GridGrammar = GridGrammar()) -> GridScore:
    """Band-count score of one generated grid against its condition."""
    toks = np.asarray(tokens, dtype=np.int64)
    if toks.min(initial=0) < 0 or toks.max(initial=0) >= grammar.vocab_size:
        raise ValueError("token id outside the image vocabulary")
    if not 0 <= condition < grammar.n_classes:
        raise ValueError(f"condition class {condition} out of range")
    counts = np.bincount(toks // grammar.band_size, minlength=grammar.n_classes)
    predicted = int(np.argmax(counts))  # ties resolve to the lowest class id
    fraction = float(counts[condition]) / toks.size
    return GridScore(
        predicted_class=predicted,
        band_fraction=fraction,
        valid=fraction >= grammar.valid_threshold,
    )


def class_accuracy(batch, grammar: GridGrammar = GridGrammar()) -> float:
    """Fraction of (tokens, condition) pairs whose majority band matches."""
    batch = list(batch)
    if not batch:
        raise ValueError("class_accuracy of an empty batch")
    hits = sum(
        score_grid(tokens, cond, grammar).predicted_class == cond
        for tokens, cond in batch
    )
    return hits / len(batch)


def sample_grid(class_id: int, rng: np.random.Generator, grammar: GridGrammar = GridGrammar()) -> np.ndarray:
    """Draw one grid from the grammar (test/calibration utility)."""
    band = np.asarray(grammar.band(class_id))
    out_band = np.asarray([t for t in range(grammar.vocab_size) if t not in set(band)])
    in_mask = rng.random(grammar.n_cells) < grammar.in_band_prob
    tokens = np.where(
        in_mask,
        band[rng.integers(0, band.size, grammar.n_cells)],
        out_band[rng.integers(0, out_band.size, grammar.n_cells)],
    )
    return tokens.astype(np.int64)


def write_grids(path, rows) -> None:
    """Dataset format: one grid per line, class id first, then token ids."""
    with open(path, "w") as fh:
        for class_id, tokens in rows:
            fh.write(",".join(str(int(v)) for v in [class_id, *tokens]))
            fh.write("\n")


def read_grids(path) -> list[tuple[int, np.ndarray]]:
    rows = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            vals = [int(v) for v in line.strip().split(",")]
            rows.append((vals[0], np.asarray(vals[1:], dtype=np.int64)))
    return rows
