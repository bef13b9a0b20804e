"""Truncated tensor algebra T^{<=n}(R^d).

An element is stored as one dense block per level; block ``k`` holds the
``d**k`` coefficients of the degree-k tensor in row-major multi-index order
(the last channel index varies fastest).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TruncatedTensor:
    """Element of the truncated tensor algebra.

    ``levels[k]`` is a flat float64 array of length ``dim**k``. Level 0 is the
    scalar term and is always stored.
    """

    dim: int
    depth: int
    levels: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        if len(self.levels) != self.depth + 1:
            raise ValueError(
                f"expected {self.depth + 1} level blocks, got {len(self.levels)}"
            )
        for k, block in enumerate(self.levels):
            if block.shape != (self.dim**k,):
                raise ValueError(
                    f"level {k} block has shape {block.shape}, expected ({self.dim ** k},)"
                )
            block.flags.writeable = False

    @classmethod
    def from_levels(cls, dim: int, levels: Sequence[np.ndarray]) -> "TruncatedTensor":
        blocks = tuple(np.array(b, dtype=np.float64).reshape(-1) for b in levels)
        return cls(dim, len(blocks) - 1, blocks)

    @property
    def size(self) -> int:
        return sum(b.size for b in self.levels)

    def level(self, k: int) -> np.ndarray:
        """Level ``k`` reshaped to a ``(dim,) * k`` array (a view)."""
        return self.levels[k].reshape((self.dim,) * k)

    def flatten(self, start: int = 0) -> np.ndarray:
        return np.concatenate(self.levels[start:])

    def __getitem__(self, word: Sequence[int]) -> float:
        """Coefficient of a word of 1-based channel indices, e.g. ``S[(1, 2)]``."""
        word = tuple(word)
        return float(self.levels[len(word)][word_to_offset(word, self.dim)])

    def __matmul__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        return tensor_mul(self, other)

    def truncate(self, depth: int) -> "TruncatedTensor":
        if depth > self.depth:
            raise ValueError(f"cannot truncate depth {self.depth} to {depth}")
        return TruncatedTensor(self.dim, depth, self.levels[: depth + 1])


def word_to_offset(word: Sequence[int], dim: int) -> int:
    """Flat offset of a 1-based multi-index inside its level block."""
    offset = 0
    for letter in word:
        if not 1 <= letter <= dim:
            raise ValueError(f"channel index {letter} outside 1..{dim}")
        offset = offset * dim + (letter - 1)
    return offset


def offset_to_word(offset: int, level: int, dim: int) -> tuple[int, ...]:
    if not 0 <= offset < dim**level:
        raise ValueError(f"offset {offset} outside level {level} block")
    word = []
    for _ in range(level):
        offset, r = divmod(offset, dim)
        word.append(r + 1)
    return tuple(reversed(word))


def total_size(dim: int, depth: int) -> int:
    return sum(dim**k for k in range(depth + 1))


def zero(dim: int, depth: int) -> TruncatedTensor:
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    return TruncatedTensor(dim, depth, tuple(np.zeros(dim**k) for k in range(depth + 1)))


def unit(dim: int, depth: int) -> TruncatedTensor:
    """Multiplicative identity (1, 0, 0, ...)."""
    t = zero(dim, depth)
    levels = list(t.levels)
    levels[0] = np.ones(1)
    return TruncatedTensor(dim, depth, tuple(levels))


def tensor_mul(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Truncated product: level k of the result is sum_j a_j (x) b_{k-j}."""
    if a.dim != b.dim or a.depth != b.depth:
        raise ValueError(
            f"shape mismatch: (dim={a.dim}, depth={a.depth}) vs (dim={b.dim}, depth={b.depth})"
        )
    out = []
    for k in range(a.depth + 1):
        acc = np.zeros(a.dim**k)
        for j in range(k + 1):
            acc += np.outer(a.levels[j], b.levels[k - j]).reshape(-1)
        out.append(acc)
    return TruncatedTensor(a.dim, a.depth, tuple(out))


def level_max_norm(a: TruncatedTensor, k: int) -> float:
    if not 0 <= k <= a.depth:
        raise ValueError(f"level {k} outside 0..{a.depth}")
    return float(np.max(np.abs(a.levels[k])))
