"""Torch implementation of the decode engine's architecture.

This is a deliberate reimplementation, not a binding: the exported
checkpoint plus the format document are the only contract with the
decode engine, so logit parity between the two forward passes validates
the architecture description itself.

Parameters are stored as right-multiplied matrices (`x @ W`, shape
in x out) to match the checkpoint layout exactly. Pre-LN blocks,
erf GELU, learned absolute positions, attention scale 1/sqrt(d_head),
final LayerNorm, unembedding over image tokens only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

LN_EPS = 1e-5


@dataclass(frozen=True)
class ArchConfig:
    n_layers: int
    n_heads: int
    d_model: int
    d_ff: int
    vocab_size: int
    n_classes: int
    max_seq_len: int
    grid_rows: int
    grid_cols: int

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    @property
    def total_vocab(self) -> int:
        return self.vocab_size + self.n_classes + 1

    @property
    def null_token(self) -> int:
        return self.vocab_size + self.n_classes

    def class_token(self, class_id: int) -> int:
        return self.vocab_size + class_id


class Block(nn.Module):
    def __init__(self, cfg: ArchConfig):
        super().__init__()
        d, dff = cfg.d_model, cfg.d_ff
        self.n_heads = cfg.n_heads
        self.d_head = cfg.d_head
        self.w_q = nn.Parameter(torch.empty(d, d))
        self.w_k = nn.Parameter(torch.empty(d, d))
        self.w_v = nn.Parameter(torch.empty(d, d))
        self.w_o = nn.Parameter(torch.empty(d, d))
        self.ln1_g = nn.Parameter(torch.ones(d))
        self.ln1_b = nn.Parameter(torch.zeros(d))
        self.w1 = nn.Parameter(torch.empty(d, dff))
        self.b1 = nn.Parameter(torch.zeros(dff))
        self.w2 = nn.Parameter(torch.empty(dff, d))
        self.b2 = nn.Parameter(torch.zeros(d))
        self.ln2_g = nn.Parameter(torch.ones(d))
        self.ln2_b = nn.Parameter(torch.zeros(d))

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        B, T, d = x.shape
        H, Dh = self.n_heads, self.d_head
        a = F.layer_norm(x, (d,), self.ln1_g, self.ln1_b, LN_EPS)
        q = (a @ self.w_q).view(B, T, H, Dh).transpose(1, 2)
        k = (a @ self.w_k).view(B, T, H, Dh).transpose(1, 2)
        v = (a @ self.w_v).view(B, T, H, Dh).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(Dh) + mask[:T, :T]
        attn = torch.softmax(scores, dim=-1) @ v
        attn = attn.transpose(1, 2).reshape(B, T, d)
        x = x + attn @ self.w_o
        a2 = F.layer_norm(x, (d,), self.ln2_g, self.ln2_b, LN_EPS)
        return x + F.gelu(a2 @ self.w1 + self.b1) @ self.w2 + self.b2


class TinyTransformer(nn.Module):
    def __init__(self, cfg: ArchConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.d_model
        self.tok_emb = nn.Parameter(torch.empty(cfg.total_vocab, d))
        self.pos_emb = nn.Parameter(torch.empty(cfg.max_seq_len, d))
        self.blocks = nn.ModuleList(Block(cfg) for _ in range(cfg.n_layers))
        self.ln_f_g = nn.Parameter(torch.ones(d))
        self.ln_f_b = nn.Parameter(torch.zeros(d))
        self.w_unembed = nn.Parameter(torch.empty(d, cfg.vocab_size))
        mask = torch.triu(
            torch.full((cfg.max_seq_len, cfg.max_seq_len), float("-inf")), diagonal=1
        )
        self.register_buffer("mask", mask, persistent=False)
        self._init_weights()

    def _init_weights(self):
        for name, p in self.named_parameters():
            if p.dim() == 2:
                nn.init.normal_(p, std=0.02)
        # LN gains/biases and MLP biases keep their ones/zeros init

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        """tokens [B, T] -> image-token logits [B, T, vocab_size]."""
        B, T = tokens.shape
        x = self.tok_emb[tokens] + self.pos_emb[:T]
        for block in self.blocks:
            x = block(x, self.mask)
        d = self.cfg.d_model
        f = F.layer_norm(x, (d,), self.ln_f_g, self.ln_f_b, LN_EPS)
        return f @ self.w_unembed
