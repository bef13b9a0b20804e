"""Transformer encoder classifier/regressor used for both signature and raw tokens."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import EncoderBlock, Linear, Module, Param, cross_entropy, mse, uniform_init


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 32
    heads: int = 2
    layers: int = 2
    ff_hidden: int = 64
    positional: bool = True
    dtype: str = "float32"


class TokenTransformer(Module):
    """Input projection, optional learned positions, encoder blocks, mean-pooled head.

    ``out_dim`` is the number of classes for classification or 1 for
    regression. ``max_len`` bounds the learned positional table; shorter
    inputs use its leading rows.
    """

    def __init__(self, in_dim: int, out_dim: int, max_len: int, cfg: ModelConfig, seed: int = 0):
        rng = np.random.default_rng(seed)
        dtype = np.dtype(cfg.dtype)
        self.cfg = cfg
        self.in_dim, self.out_dim, self.max_len = in_dim, out_dim, max_len
        self.embed = Linear(in_dim, cfg.d_model, rng, dtype)
        self.pos = Param(uniform_init(rng, (max_len, cfg.d_model), cfg.d_model, dtype)) if cfg.positional else None
        self.blocks = [EncoderBlock(cfg.d_model, cfg.heads, cfg.ff_hidden, rng, dtype) for _ in range(cfg.layers)]
        self.head = Linear(cfg.d_model, out_dim, rng, dtype)

    @property
    def dtype(self):
        return self.embed.weight.value.dtype

    def forward(self, x):
        x = np.asarray(x, dtype=self.dtype)
        b, n, d = x.shape
        if d != self.in_dim:
            raise ValueError(f"token dim {d} does not match model input dim {self.in_dim}")
        if n > self.max_len:
            raise ValueError(f"sequence length {n} exceeds positional table of {self.max_len}")
        h = self.embed(x)
        if self.pos is not None:
            h = h + self.pos.value[:n]
        for block in self.blocks:
            h = block(h)
        self._n = n
        return self.head(h.mean(axis=1))

    def backward(self, g_out):
        g = self.head.backward(g_out)
        n = self._n
        g = np.broadcast_to(g[:, None, :] / n, (g.shape[0], n, g.shape[1])).copy()
        for block in reversed(self.blocks):
            g = block.backward(g)
        if self.pos is not None:
            self.pos.grad[:n] += g.sum(axis=0)
        return self.embed.backward(g)

    def loss_and_grad(self, x, y, task: str) -> float:
        """Forward + backward for one (micro-)batch; gradients accumulate."""
        out = self.forward(x)
        if task == "classify":
            loss, g = cross_entropy(out, y)
        else:
            loss, g = mse(out, y)
        self.backward(g.astype(self.dtype))
        return loss

    def predict(self, x, batch_size: int = 64) -> np.ndarray:
        outs = [self.forward(x[i : i + batch_size]) for i in range(0, len(x), batch_size)]
        return np.concatenate(outs, axis=0)

    def num_params(self) -> int:
        return sum(p.value.size for p in self.params())
