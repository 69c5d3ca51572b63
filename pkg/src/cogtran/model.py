"""Row/column attention encoder with a per-column token classifier.

Each layer applies row attention (within a word) and column attention (within
one alignment site across languages) to the same normalized input and adds
both to the residual stream, followed by a position-wise feed-forward block.
The final 2D grid of hidden states is summed over rows, so the output has
one vector per alignment column, which is classified over the vocabulary.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .encoding import IGNORE, TokenGrid
from .errors import NoSupervisedPositions, WidthExceeded


@dataclass
class ModelConfig:
    vocab_size: int
    hidden_size: int = 128
    intermediate_size: int = 256
    num_heads: int = 2
    num_layers: int = 2
    max_row_positions: int = 256
    dropout: float = 0.1

    def __post_init__(self):
        for name in ("vocab_size", "hidden_size", "intermediate_size", "num_heads",
                     "num_layers", "max_row_positions"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.hidden_size % self.num_heads:
            raise ValueError("hidden_size must be divisible by num_heads")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


PRESETS = {
    "tiny": dict(hidden_size=128, intermediate_size=256, num_heads=2, num_layers=2),
    "small": dict(hidden_size=256, intermediate_size=512, num_heads=4, num_layers=4),
}


def preset(name: str, vocab_size: int, **overrides) -> ModelConfig:
    return ModelConfig(vocab_size=vocab_size, **{**PRESETS[name], **overrides})


class AxialAttention(nn.Module):
    """Multi-head self-attention along one axis of a (batch, rows, cols, hidden) grid."""

    def __init__(self, hidden: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = hidden // heads
        self.q_proj = nn.Linear(hidden, hidden)
        self.k_proj = nn.Linear(hidden, hidden)
        self.v_proj = nn.Linear(hidden, hidden)
        self.out_proj = nn.Linear(hidden, hidden)

    def forward(self, x: torch.Tensor, pad: torch.Tensor) -> torch.Tensor:
        # x: (N, L, H) sequences along the attended axis; pad: (N, L)
        n, length, hidden = x.shape
        split = lambda t: t.view(n, length, self.heads, self.head_dim).transpose(1, 2)  # noqa: E731
        q = split(self.q_proj(x)) / math.sqrt(self.head_dim)
        k = split(self.k_proj(x))
        v = split(self.v_proj(x))
        scores = q @ k.transpose(-1, -2)
        # a sequence made only of padding keeps its (ignored) scores finite
        key_mask = pad & ~pad.all(dim=-1, keepdim=True)
        scores = scores.masked_fill(key_mask[:, None, None, :], float("-inf"))
        out = torch.softmax(scores, dim=-1) @ v
        out = out.transpose(1, 2).reshape(n, length, hidden)
        return self.out_proj(out)


class CognateLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        h = cfg.hidden_size
        self.attn_norm = nn.LayerNorm(h)
        self.row_attn = AxialAttention(h, cfg.num_heads)
        self.col_attn = AxialAttention(h, cfg.num_heads)
        self.ffn_norm = nn.LayerNorm(h)
        self.ffn_in = nn.Linear(h, cfg.intermediate_size)
        self.ffn_out = nn.Linear(cfg.intermediate_size, h)
        self.dropout = nn.Dropout(cfg.dropout)

    def forward(self, h: torch.Tensor, pad: torch.Tensor) -> torch.Tensor:
        b, r, c, d = h.shape
        x = self.attn_norm(h)
        row = self.row_attn(x.reshape(b * r, c, d), pad.reshape(b * r, c)).view(b, r, c, d)
        xt = x.transpose(1, 2).reshape(b * c, r, d)
        col = self.col_attn(xt, pad.transpose(1, 2).reshape(b * c, r))
        col = col.view(b, c, r, d).transpose(1, 2)
        h = h + self.dropout(row + col)
        ff = self.ffn_out(self.dropout(F.gelu(self.ffn_in(self.ffn_norm(h)))))
        return h + self.dropout(ff)


class CognateTransformer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.config = cfg
        self.embed_tokens = nn.Embedding(cfg.vocab_size, cfg.hidden_size)
        self.embed_positions = nn.Embedding(cfg.max_row_positions, cfg.hidden_size)
        self.layers = nn.ModuleList(CognateLayer(cfg) for _ in range(cfg.num_layers))
        self.head_dense = nn.Linear(cfg.hidden_size, cfg.hidden_size)
        self.head_norm = nn.LayerNorm(cfg.hidden_size)
        self.classifier = nn.Linear(cfg.hidden_size, cfg.vocab_size)

    def forward(self, ids: torch.Tensor, pad: torch.Tensor) -> torch.Tensor:
        """ids, pad: (batch, rows, cols) -> logits (batch, cols, vocab)."""
        width = ids.shape[-1]
        if width > self.config.max_row_positions:
            raise WidthExceeded(
                f"grid width {width} exceeds max_row_positions={self.config.max_row_positions}"
            )
        positions = torch.arange(width, device=ids.device)
        h = self.embed_tokens(ids) + self.embed_positions(positions)
        for layer in self.layers:
            h = layer(h, pad)
        pooled = (h * (~pad).unsqueeze(-1).to(h.dtype)).sum(dim=1)
        return self.classifier(self.head_norm(self.head_dense(pooled)))


def init_params(cfg: ModelConfig, seed: int) -> CognateTransformer:
    """Fresh model: normal(0, 0.02) weights, zero biases, unit norm scales."""
    model = CognateTransformer(cfg)
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, p in model.named_parameters():
            if isinstance(_owner(model, name), nn.LayerNorm):
                p.fill_(1.0 if name.endswith("weight") else 0.0)
            elif name.endswith("bias"):
                p.zero_()
            else:
                p.normal_(0.0, 0.02, generator=gen)
    return model


def _owner(model: nn.Module, param_name: str) -> nn.Module:
    return model.get_submodule(param_name.rpartition(".")[0])


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


def forward(model: CognateTransformer, grid: TokenGrid) -> np.ndarray:
    """Logits of one grid as a (width, vocab) array, in eval mode."""
    was_training = model.training
    model.eval()
    with torch.no_grad():
        ids = torch.as_tensor(grid.ids)[None]
        pad = torch.as_tensor(grid.pad_mask)[None]
        out = model(ids, pad)[0]
    model.train(was_training)
    return out.numpy()


def loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy over supervised (non-IGNORE) positions."""
    if logits.shape[:-1] != labels.shape:
        raise ValueError(f"labels {tuple(labels.shape)} do not match logits {tuple(logits.shape)}")
    if not bool((labels != IGNORE).any()):
        raise NoSupervisedPositions("no supervised positions in batch")
    return F.cross_entropy(logits.reshape(-1, logits.shape[-1]), labels.reshape(-1),
                           ignore_index=IGNORE)
