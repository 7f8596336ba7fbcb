"""Independent reference implementations used only by tests.

`full_forward_logits` recomputes every position from scratch over the
whole prefix with an explicit causal mask and no cache, which is the
ground truth the incremental cached decoder must match. The scaled
variant rebuilds one perturbed step by literally multiplying stored
value vectors, so it also cross-checks the engine's trick of folding
the scaling into attention weights.
"""

import numpy as np
from scipy.special import erf

from guided_decode.model import LN_EPS, ModelConfig, ModelParams


def _ln(x, g, b):
    mean = x.mean(axis=-1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + LN_EPS) * g + b


def _gelu(x):
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def full_forward_logits(
    config: ModelConfig, params: ModelParams, tokens
) -> np.ndarray:
    """Logits at every position from a full-prefix masked forward."""
    toks = np.asarray(tokens, dtype=np.int64)
    T = toks.size
    H, Dh = config.n_heads, config.d_head
    x = (params.tok_emb[toks] + params.pos_emb[:T]).astype(np.float32)
    mask = np.triu(np.full((T, T), -np.inf, dtype=np.float32), k=1)
    for lp in params.layers:
        a = _ln(x, lp.ln1_g, lp.ln1_b)
        q = (a @ lp.w_q).reshape(T, H, Dh)
        k = (a @ lp.w_k).reshape(T, H, Dh)
        v = (a @ lp.w_v).reshape(T, H, Dh)
        outs = []
        for h in range(H):
            scores = q[:, h] @ k[:, h].T / np.sqrt(Dh) + mask
            scores = scores - scores.max(axis=-1, keepdims=True)
            alpha = np.exp(scores)
            alpha /= alpha.sum(axis=-1, keepdims=True)
            outs.append(alpha @ v[:, h])
        x = x + np.concatenate(outs, axis=-1) @ lp.w_o
        a2 = _ln(x, lp.ln2_g, lp.ln2_b)
        x = x + _gelu(a2 @ lp.w1 + lp.b1) @ lp.w2 + lp.b2
    return _ln(x, params.ln_f_g, params.ln_f_b) @ params.w_unembed


def full_forward_scaled_last(
    config: ModelConfig, params: ModelParams, tokens, scale
) -> np.ndarray:
    """Logits for the final token when it reads prior values scaled by scale[i].

    Prior positions keep the clean streams they had when their keys and
    values were produced; only the final position's reads are perturbed,
    by explicitly scaling the stored value vectors.
    """
    toks = np.asarray(tokens, dtype=np.int64)
    scale = np.asarray(scale, dtype=np.float32)
    T = toks.size
    L = T - 1
    assert scale.size == L
    H, Dh = config.n_heads, config.d_head

    # clean pass over the prefix records per-layer inputs so we can
    # re-derive each layer's cached keys/values
    prefix_x = [
        (params.tok_emb[toks] + params.pos_emb[:T]).astype(np.float32)
    ]
    x = prefix_x[0]
    for lp in params.layers:
        a = _ln(x, lp.ln1_g, lp.ln1_b)
        q = (a @ lp.w_q).reshape(T, H, Dh)
        k = (a @ lp.w_k).reshape(T, H, Dh)
        v = (a @ lp.w_v).reshape(T, H, Dh)
        mask = np.triu(np.full((T, T), -np.inf, dtype=np.float32), k=1)
        outs = []
        for h in range(H):
            scores = q[:, h] @ k[:, h].T / np.sqrt(Dh) + mask
            scores = scores - scores.max(axis=-1, keepdims=True)
            alpha = np.exp(scores)
            alpha /= alpha.sum(axis=-1, keepdims=True)
            outs.append(alpha @ v[:, h])
        x = x + np.concatenate(outs, axis=-1) @ lp.w_o
        a2 = _ln(x, lp.ln2_g, lp.ln2_b)
        x = x + _gelu(a2 @ lp.w1 + lp.b1) @ lp.w2 + lp.b2
        prefix_x.append(x)

    # perturbed stream for the final token only
    h_pert = (params.tok_emb[toks[-1]] + params.pos_emb[L]).astype(np.float32)
    for li, lp in enumerate(params.layers):
        x_in = prefix_x[li]
        a_hist = _ln(x_in[:L], lp.ln1_g, lp.ln1_b)
        k_hist = (a_hist @ lp.w_k).reshape(L, H, Dh)
        v_hist = (a_hist @ lp.w_v).reshape(L, H, Dh) * scale[:, None, None]
        a_last = _ln(h_pert, lp.ln1_g, lp.ln1_b)
        q_last = (a_last @ lp.w_q).reshape(H, Dh)
        k_last = (a_last @ lp.w_k).reshape(H, Dh)
        v_last = (a_last @ lp.w_v).reshape(H, Dh)
        outs = []
        for h in range(H):
            scores = np.concatenate(
                [k_hist[:, h] @ q_last[h], [k_last[h] @ q_last[h]]]
            ) / np.sqrt(Dh)
            scores = scores - scores.max()
            alpha = np.exp(scores)
            alpha /= alpha.sum()
            outs.append(alpha[:L] @ v_hist[:, h] + alpha[L] * v_last[h])
        h_pert = h_pert + np.concatenate(outs) @ lp.w_o
        a2 = _ln(h_pert, lp.ln2_g, lp.ln2_b)
        h_pert = h_pert + _gelu(a2 @ lp.w1 + lp.b1) @ lp.w2 + lp.b2
    return _ln(h_pert, params.ln_f_g, params.ln_f_b) @ params.w_unembed
