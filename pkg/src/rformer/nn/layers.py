"""Dense layers with hand-written backward passes.

Every layer caches what it needs during ``forward`` and, in ``backward``,
accumulates parameter gradients (``+=``, so micro-batches can be summed) and
returns the gradient with respect to its input. Inputs are batched arrays of
shape ``(B, L, D)`` unless stated otherwise.
"""
from __future__ import annotations

import math

import numpy as np


class Param:
    """A trainable array with its gradient and Adam moment buffers."""

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad = np.zeros_like(value)
        self.m = np.zeros_like(value)
        self.v = np.zeros_like(value)
        self.step = 0

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[...] = 0.0


def uniform_init(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Module:
    def named_params(self, prefix: str = "") -> list[tuple[str, Param]]:
        out = []
        for name, attr in vars(self).items():
            if isinstance(attr, Param):
                out.append((prefix + name, attr))
            elif isinstance(attr, Module):
                out.extend(attr.named_params(prefix + name + "."))
            elif isinstance(attr, list):
                for i, item in enumerate(attr):
                    if isinstance(item, Module):
                        out.extend(item.named_params(f"{prefix}{name}.{i}."))
        return out

    def params(self) -> list[Param]:
        return [p for _, p in self.named_params()]

    def zero_grad(self):
        for p in self.params():
            p.zero_grad()

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, dtype=np.float64, bias: bool = True):
        self.weight = Param(uniform_init(rng, (d_in, d_out), d_in, dtype))
        self.bias = Param(uniform_init(rng, (d_out,), d_in, dtype)) if bias else None

    def forward(self, x):
        self._x = x
        y = x @ self.weight.value
        if self.bias is not None:
            y = y + self.bias.value
        return y

    def backward(self, gy):
        x = self._x
        self.weight.grad += x.reshape(-1, x.shape[-1]).T @ gy.reshape(-1, gy.shape[-1])
        if self.bias is not None:
            self.bias.grad += gy.reshape(-1, gy.shape[-1]).sum(axis=0)
        return gy @ self.weight.value.T


class ReLU(Module):
    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, gy):
        return gy * self._mask


class LayerNorm(Module):
    def __init__(self, dim: int, dtype=np.float64, eps: float = 1e-5):
        self.gamma = Param(np.ones(dim, dtype=dtype))
        self.beta = Param(np.zeros(dim, dtype=dtype))
        self.eps = eps

    def forward(self, x):
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + self.eps)
        xhat = xc * inv
        self._cache = (xhat, inv)
        return xhat * self.gamma.value + self.beta.value

    def backward(self, gy):
        xhat, inv = self._cache
        d = xhat.shape[-1]
        self.gamma.grad += (gy * xhat).reshape(-1, d).sum(axis=0)
        self.beta.grad += gy.reshape(-1, d).sum(axis=0)
        gx = gy * self.gamma.value
        return inv * (gx - gx.mean(axis=-1, keepdims=True) - xhat * (gx * xhat).mean(axis=-1, keepdims=True))


def softmax(scores: np.ndarray, axis: int = -1) -> np.ndarray:
    z = scores - scores.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


class MultiHeadAttention(Module):
    """Scaled dot-product self-attention with ``heads`` heads of width ``d_head``.

    Query/key/value projections carry no bias; the concatenated heads pass
    through an output projection back to ``d_out``.
    """

    def __init__(self, d_in: int, heads: int, d_head: int, d_out: int, rng, dtype=np.float64):
        if heads < 1 or d_head < 1:
            raise ValueError(f"heads and d_head must be >= 1, got {heads}, {d_head}")
        self.heads, self.d_head = heads, d_head
        self.wq = Linear(d_in, heads * d_head, rng, dtype, bias=False)
        self.wk = Linear(d_in, heads * d_head, rng, dtype, bias=False)
        self.wv = Linear(d_in, heads * d_head, rng, dtype, bias=False)
        self.wo = Linear(heads * d_head, d_out, rng, dtype)

    def _split(self, t):
        b, n, _ = t.shape
        return t.reshape(b, n, self.heads, self.d_head).transpose(0, 2, 1, 3)

    def _merge(self, t):
        b, h, n, dh = t.shape
        return t.transpose(0, 2, 1, 3).reshape(b, n, h * dh)

    def forward(self, x):
        q = self._split(self.wq(x))
        k = self._split(self.wk(x))
        v = self._split(self.wv(x))
        scale = 1.0 / math.sqrt(self.d_head)
        attn = softmax((q @ k.transpose(0, 1, 3, 2)) * scale)
        self._cache = (q, k, v, attn, scale)
        return self.wo(self._merge(attn @ v))

    def backward(self, gy):
        q, k, v, attn, scale = self._cache
        g_ctx = self._split(self.wo.backward(gy))
        g_attn = g_ctx @ v.transpose(0, 1, 3, 2)
        g_v = attn.transpose(0, 1, 3, 2) @ g_ctx
        g_scores = attn * (g_attn - (g_attn * attn).sum(axis=-1, keepdims=True)) * scale
        g_q = g_scores @ k
        g_k = g_scores.transpose(0, 1, 3, 2) @ q
        return (
            self.wq.backward(self._merge(g_q))
            + self.wk.backward(self._merge(g_k))
            + self.wv.backward(self._merge(g_v))
        )


class FeedForward(Module):
    def __init__(self, dim: int, hidden: int, rng, dtype=np.float64):
        self.fc1 = Linear(dim, hidden, rng, dtype)
        self.act = ReLU()
        self.fc2 = Linear(hidden, dim, rng, dtype)

    def forward(self, x):
        return self.fc2(self.act(self.fc1(x)))

    def backward(self, gy):
        return self.fc1.backward(self.act.backward(self.fc2.backward(gy)))


class EncoderBlock(Module):
    """Pre-norm residual block: ``x + attn(ln(x))`` then ``x + ffn(ln(x))``."""

    def __init__(self, dim: int, heads: int, ff_hidden: int, rng, dtype=np.float64):
        if dim % heads:
            raise ValueError(f"d_model={dim} is not divisible by heads={heads}")
        self.ln1 = LayerNorm(dim, dtype)
        self.attn = MultiHeadAttention(dim, heads, dim // heads, dim, rng, dtype)
        self.ln2 = LayerNorm(dim, dtype)
        self.ffn = FeedForward(dim, ff_hidden, rng, dtype)

    def forward(self, x):
        x = x + self.attn(self.ln1(x))
        return x + self.ffn(self.ln2(x))

    def backward(self, gy):
        g = gy + self.ln2.backward(self.ffn.backward(gy))
        return g + self.ln1.backward(self.attn.backward(g))


def multi_view_attention(tokens: np.ndarray, wq, wk, wv, wo=None) -> np.ndarray:
    """Functional multi-head attention over a single ``(L, d)`` token matrix.

    ``wq``, ``wk``, ``wv`` are sequences of per-head ``(d, d_head)`` matrices;
    the head outputs are concatenated and, when ``wo`` is given, projected.
    """
    tokens = np.asarray(tokens, dtype=np.float64)
    if tokens.ndim != 2:
        raise ValueError(f"tokens must be 2-D, got shape {tokens.shape}")
    heads = []
    for q_w, k_w, v_w in zip(wq, wk, wv):
        if q_w.shape[0] != tokens.shape[1]:
            raise ValueError(f"projection expects width {q_w.shape[0]}, tokens have {tokens.shape[1]}")
        q, k, v = tokens @ q_w, tokens @ k_w, tokens @ v_w
        heads.append(softmax(q @ k.T / math.sqrt(q_w.shape[1])) @ v)
    out = np.concatenate(heads, axis=1)
    return out if wo is None else out @ wo


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. ``logits``."""
    labels = np.asarray(labels, dtype=np.int64)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} does not match batch of {n}")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= c:
        raise ValueError(f"label out of range 0..{c - 1}")
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsum
    loss = -logp[np.arange(n), labels].mean()
    grad = np.exp(logp)
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n


def mse(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    pred = pred.reshape(pred.shape[0], -1)
    target = np.asarray(target, dtype=pred.dtype).reshape(pred.shape)
    diff = pred - target
    return float((diff * diff).mean()), 2.0 * diff / diff.size
