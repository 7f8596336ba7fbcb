"""Decoder-only transformer with per-branch KV caches and a transient
value-scaling hook.

Each generation branch (conditional / unconditional) owns one
BranchCache. `forward_step` consumes one token: it computes the token's
per-layer keys and values, appends them to the cache, and returns
next-token logits over the image vocabulary. `forward_step_scaled` is
identical except that the attention of the *incoming* token reads every
already-cached value vector at position i multiplied by scale[i]. The
scaling is transient: the stored cache is advanced with the exact same
(unscaled) keys and values a plain `forward_step` would have written.

To make that guarantee bitwise, every forward — scaled or not — runs the
same two-row batch through the layers: row 0 is the clean stream whose
keys/values are stored, row 1 is the perturbed stream that produces the
scaled logits. Keys are never scaled, so attention weights are shared
work, and value scaling folds into the attention weights
(sum_i a_i (s_i v_i) == sum_i (a_i s_i) v_i), which keeps the scaled
step within a few percent of a plain step.

Architecture (fixed): pre-LN blocks, h += Attn(LN(h)); h += MLP(LN(h))
with erf-GELU, learned absolute positional embeddings, attention scale
1/sqrt(d_head), final LayerNorm, untied unembedding over image tokens
only. Class and null tokens are inputs, never outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import DTYPE, gelu, layer_normalize, softmax

LN_EPS = 1e-5


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int
    n_heads: int
    d_model: int
    d_ff: int
    vocab_size: int
    n_classes: int
    max_seq_len: int
    grid_rows: int
    grid_cols: int

    def __post_init__(self):
        for name in ("n_layers", "n_heads", "d_model", "d_ff", "vocab_size",
                     "n_classes", "max_seq_len", "grid_rows", "grid_cols"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model {self.d_model} not divisible by n_heads {self.n_heads}"
            )
        if self.grid_rows * self.grid_cols != self.max_seq_len - 1:
            raise ValueError(
                "grid does not fill the sequence: "
                f"{self.grid_rows}x{self.grid_cols} != {self.max_seq_len} - 1"
            )

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    @property
    def n_steps(self) -> int:
        """Number of image tokens generated per sample."""
        return self.grid_rows * self.grid_cols


def default_config() -> ModelConfig:
    """The desk-scale configuration used throughout the test suite."""
    return ModelConfig(
        n_layers=2, n_heads=2, d_model=32, d_ff=128,
        vocab_size=16, n_classes=4, max_seq_len=65, grid_rows=8, grid_cols=8,
    )


@dataclass(frozen=True)
class VocabLayout:
    """Embedding-table layout: image tokens, then class tokens, then null.

    Image tokens occupy [0, vocab_size); class c maps to vocab_size + c;
    the null (condition-free) token is the final id. The condition slot
    at position 0 doubles as sequence start, so there is no separate
    begin-of-sequence id.
    """

    vocab_size: int
    n_classes: int

    @classmethod
    def from_config(cls, config: ModelConfig) -> "VocabLayout":
        return cls(vocab_size=config.vocab_size, n_classes=config.n_classes)

    def class_token(self, class_id: int) -> int:
        if not 0 <= class_id < self.n_classes:
            raise ValueError(f"class id {class_id} out of range [0, {self.n_classes})")
        return self.vocab_size + class_id

    @property
    def null_token(self) -> int:
        return self.vocab_size + self.n_classes

    @property
    def total_vocab(self) -> int:
        return self.vocab_size + self.n_classes + 1


@dataclass
class LayerParams:
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    ln1_g: np.ndarray
    ln1_b: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    ln2_g: np.ndarray
    ln2_b: np.ndarray


@dataclass
class ModelParams:
    tok_emb: np.ndarray   # [total_vocab, d_model]
    pos_emb: np.ndarray   # [max_seq_len, d_model]
    layers: list[LayerParams]
    ln_f_g: np.ndarray
    ln_f_b: np.ndarray
    w_unembed: np.ndarray  # [d_model, vocab_size]: image tokens only


@dataclass
class BranchCache:
    """Single-owner decode state for one branch.

    keys/values are preallocated [max_seq_len, n_heads, d_head] per layer
    with `length` valid positions. Position 0 is the condition slot;
    `confidences` holds one recorded p_max per cached generated position,
    so its length always equals the token count minus one.
    """

    keys: list[np.ndarray]
    values: list[np.ndarray]
    length: int = 0
    token_ids: list[int] = field(default_factory=list)
    confidences: list[float] = field(default_factory=list)

    @classmethod
    def empty(cls, config: ModelConfig) -> "BranchCache":
        shape = (config.max_seq_len, config.n_heads, config.d_head)
        return cls(
            keys=[np.zeros(shape, dtype=DTYPE) for _ in range(config.n_layers)],
            values=[np.zeros(shape, dtype=DTYPE) for _ in range(config.n_layers)],
        )

    @property
    def capacity(self) -> int:
        return self.keys[0].shape[0]

    @property
    def n_heads(self) -> int:
        return self.keys[0].shape[1]

    @property
    def d_head(self) -> int:
        return self.keys[0].shape[2]

    def layer_keys(self, layer: int) -> np.ndarray:
        return self.keys[layer][: self.length]

    def layer_values(self, layer: int) -> np.ndarray:
        return self.values[layer][: self.length]

    def value_norms(self) -> np.ndarray:
        """L2 norm per position of its values concatenated across layers/heads."""
        sq = np.zeros(self.length, dtype=np.float64)
        for v in self.values:
            block = v[: self.length].astype(np.float64)
            sq += (block * block).sum(axis=(1, 2))
        return np.sqrt(sq)


def _forward(
    cache: BranchCache,
    token_id: int,
    params: ModelParams,
    scale: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    """Advance the cache by one token; return (clean, perturbed) logits."""
    pos = cache.length
    if pos >= cache.capacity:
        raise ValueError(f"sequence overflow: cache already holds {pos} positions")
    if not 0 <= token_id < params.tok_emb.shape[0]:
        raise ValueError(f"token id {token_id} outside the embedding table")

    # callers pass scale=None for any all-ones scaling; a float32 array
    # here always carries a real perturbation
    trivial = scale is None or scale.size == 0
    s32 = None if trivial else scale

    n_heads, d_head = cache.n_heads, cache.d_head
    h = params.tok_emb[token_id] + params.pos_emb[pos]
    x = np.stack([h, h]).astype(DTYPE)  # row 0: clean/stored, row 1: perturbed
    inv_sqrt = DTYPE(1.0 / np.sqrt(d_head))

    for li, lp in enumerate(params.layers):
        a = layer_normalize(x, lp.ln1_g, lp.ln1_b, LN_EPS)
        q = (a @ lp.w_q).reshape(2, n_heads, d_head)
        k = (a @ lp.w_k).reshape(2, n_heads, d_head)
        v = (a @ lp.w_v).reshape(2, n_heads, d_head)

        # attention over cached positions plus the incoming token itself;
        # each row attends to its own fresh key/value, never the other's
        own = np.einsum("rhd,rhd->hr", q, k)
        if pos:
            hist = np.einsum("rhd,lhd->hrl", q, cache.keys[li][:pos])
            scores = np.concatenate([hist, own[:, :, None]], axis=2)
        else:
            scores = own[:, :, None]
        alpha = softmax(scores * inv_sqrt)  # [n_heads, 2, pos + 1]
        if s32 is not None and pos:
            alpha[:, 1, :pos] *= s32  # values enter linearly, so scaling
            # the weights equals scaling the stored vectors
        read = alpha[:, :, pos].T.reshape(2, n_heads, 1) * v
        if pos:
            read = read + np.einsum(
                "hrl,lhd->rhd", alpha[:, :, :pos], cache.values[li][:pos]
            )
        x = x + read.reshape(2, n_heads * d_head) @ lp.w_o

        a2 = layer_normalize(x, lp.ln2_g, lp.ln2_b, LN_EPS)
        x = x + gelu(a2 @ lp.w1 + lp.b1) @ lp.w2 + lp.b2

        cache.keys[li][pos] = k[0]
        cache.values[li][pos] = v[0]

    final = layer_normalize(x, params.ln_f_g, params.ln_f_b, LN_EPS)
    logits = final @ params.w_unembed
    cache.token_ids.append(int(token_id))
    cache.length += 1
    if trivial:
        return logits[0], logits[0]
    return logits[0], logits[1]


def forward_step(cache: BranchCache, token_id: int, params: ModelParams) -> np.ndarray:
    """Consume one token, append its keys/values, return next-token logits."""
    clean, _ = _forward(cache, token_id, params, None)
    return clean


def forward_step_dual(
    cache: BranchCache, token_id: int, params: ModelParams, scale: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """One scaled step returning both streams: (clean, perturbed) logits.

    The clean logits are what forward_step would have returned; the decode
    loop needs them alongside the perturbed ones to log the context shift.
    """
    scale = np.asarray(scale, dtype=np.float64)
    if scale.size != cache.length:
        raise ValueError(
            f"scale has {scale.size} entries for a cache of length {cache.length}"
        )
    if scale.size and (scale.min() < 0.0 or scale.max() > 1.0):
        raise ValueError("scale entries must lie in [0, 1]")
    if scale.size == 0 or np.all(scale == 1.0):
        return _forward(cache, token_id, params, None)
    return _forward(cache, token_id, params, scale.astype(DTYPE))


def forward_step_scaled(
    cache: BranchCache, token_id: int, params: ModelParams, scale: np.ndarray
) -> np.ndarray:
    """forward_step with cached values at position i transiently scaled by scale[i].

    The stored cache is advanced exactly as forward_step would have; only
    the returned logits see the perturbation.
    """
    _, perturbed = forward_step_dual(cache, token_id, params, scale)
    return perturbed


def init_caches(
    config: ModelConfig, params: ModelParams, class_id: int
) -> tuple[BranchCache, BranchCache]:
    """Seed both branch caches with their condition slot (class vs null)."""
    layout = VocabLayout.from_config(config)
    cond = BranchCache.empty(config)
    uncond = BranchCache.empty(config)
    forward_step(cond, layout.class_token(class_id), params)
    forward_step(uncond, layout.null_token, params)
    return cond, uncond


def record_confidence(cache: BranchCache, p_max: float) -> None:
    """Record the confidence of the newest cached generated token."""
    if not 0.0 <= p_max <= 1.0:
        raise ValueError(f"confidence {p_max} outside [0, 1]")
    if len(cache.confidences) >= max(cache.length - 1, 0):
        raise ValueError("every cached generated position already has a confidence")
    cache.confidences.append(float(p_max))
