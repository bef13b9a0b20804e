"""Multi-view signature transform: global and local window signatures as tokens."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .series import TimeSeries, WindowGrid, slice_window, uniform_grid, window_increments
from .signature import fold_increments, level_scale, levels_mul, path_signature, time_augment
from .tensor_algebra import TruncatedTensor, tensor_mul, unit

MODES = ("multi-view", "local", "global")


@dataclass(frozen=True)
class SignatureConfig:
    depth: int = 2
    num_windows: int = 75
    mode: str = "multi-view"
    time_augment: bool = True
    level_rescale: bool = True

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"signature depth must be >= 1, got {self.depth}")
        if self.num_windows < 1:
            raise ValueError(f"num_windows must be >= 1, got {self.num_windows}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class MultiViewTokens:
    tokens: np.ndarray  # (num_windows, token_dim)
    dim: int
    depth: int
    mode: str

    @property
    def num_windows(self) -> int:
        return self.tokens.shape[0]


def token_dim(dim: int, depth: int, mode: str) -> int:
    views = 2 if mode == "multi-view" else 1
    return views * sum(dim**k for k in range(1, depth + 1))


def local_signatures(series: TimeSeries, grid: WindowGrid, depth: int) -> list[TruncatedTensor]:
    """Signature of the interpolant over each window, one reference fold per window."""
    b = grid.boundaries
    return [path_signature(slice_window(series, b[k], b[k + 1]), depth) for k in range(grid.num_windows)]


def global_signatures(local_sigs: Sequence[TruncatedTensor]) -> list[TruncatedTensor]:
    """Prefix products G_k = G_{k-1} (x) local_k with G_0 the unit."""
    if not local_sigs:
        raise ValueError("need at least one local signature")
    g = unit(local_sigs[0].dim, local_sigs[0].depth)
    out = []
    for s in local_sigs:
        g = tensor_mul(g, s)
        out.append(g)
    return out


def _prefix_levels(local: list[np.ndarray], dim: int) -> list[np.ndarray]:
    """Running products over the window axis (-2) of batched level blocks."""
    n_win = local[0].shape[-2]
    g = [blk[..., 0, :] for blk in local]
    rows = [g]
    for k in range(1, n_win):
        g = levels_mul(g, [blk[..., k, :] for blk in local], dim)
        rows.append(g)
    return [np.stack([r[lvl] for r in rows], axis=-2) for lvl in range(len(local))]


def _flatten(levels: list[np.ndarray], rescale: bool) -> np.ndarray:
    scale = level_scale(len(levels) - 1)
    blocks = [blk * scale[k] if rescale else blk for k, blk in enumerate(levels) if k > 0]
    return np.concatenate(blocks, axis=-1)


def _tokens(increments: np.ndarray, dim: int, depth: int, mode: str, rescale: bool) -> np.ndarray:
    """Token matrices from padded window increments of shape ``(..., L̄, m, d)``."""
    local = fold_increments(increments, depth)
    parts = []
    if mode in ("multi-view", "global"):
        parts.append(_flatten(_prefix_levels(local, dim), rescale))
    if mode in ("multi-view", "local"):
        parts.append(_flatten(local, rescale))
    return np.concatenate(parts, axis=-1)


def _prepare(series: TimeSeries, cfg: SignatureConfig, grid: WindowGrid | None = None) -> np.ndarray:
    if cfg.time_augment:
        series = time_augment(series)
    if grid is None:
        grid = uniform_grid(series, cfg.num_windows)
    return window_increments(series, grid)


def _pad_stack(incs: Sequence[np.ndarray]) -> np.ndarray:
    m = max(a.shape[1] for a in incs)
    out = np.zeros((len(incs), incs[0].shape[0], m, incs[0].shape[2]))
    for i, a in enumerate(incs):
        out[i, :, : a.shape[1]] = a
    return out


def multi_view_transform(
    series: TimeSeries,
    grid: WindowGrid | None = None,
    depth: int | None = None,
    mode: str | None = None,
    config: SignatureConfig | None = None,
) -> MultiViewTokens:
    """Tokenise one series.

    Row k is ``[global_k, local_k]`` (levels 1..depth each, level 0 dropped)
    in multi-view mode, or just one of the two otherwise. With
    ``level_rescale`` each level-k block is multiplied by k!. ``grid``
    defaults to ``num_windows`` uniform windows over the series span.
    """
    cfg = config or SignatureConfig()
    cfg = SignatureConfig(
        depth=cfg.depth if depth is None else depth,
        num_windows=cfg.num_windows if grid is None else grid.num_windows,
        mode=cfg.mode if mode is None else mode,
        time_augment=cfg.time_augment,
        level_rescale=cfg.level_rescale,
    )
    inc = _prepare(series, cfg, grid)
    tokens = _tokens(inc, inc.shape[-1], cfg.depth, cfg.mode, cfg.level_rescale)
    tokens.flags.writeable = False
    return MultiViewTokens(tokens, inc.shape[-1], cfg.depth, cfg.mode)


def _transform_chunk(chunk: Sequence[TimeSeries], cfg: SignatureConfig) -> list[MultiViewTokens]:
    inc = _pad_stack([_prepare(s, cfg) for s in chunk])
    d = inc.shape[-1]
    tokens = _tokens(inc, d, cfg.depth, cfg.mode, cfg.level_rescale)
    out = []
    for t in tokens:
        t.flags.writeable = False
        out.append(MultiViewTokens(t, d, cfg.depth, cfg.mode))
    return out


def batch_transform(
    dataset: Sequence[TimeSeries], config: SignatureConfig, workers: int | None = None, chunk: int = 64
) -> list[MultiViewTokens]:
    """Tokenise every series; chunks of series are vectorised and run on a thread pool.

    Each series goes through elementwise operations only, in a fixed order,
    and zero padding is an exact no-op, so results are bitwise independent
    of ``workers`` and ``chunk``.
    """
    if not dataset:
        return []
    dims = {s.dim for s in dataset}
    if len(dims) > 1:
        raise ValueError(f"heterogeneous series dimensions: {sorted(dims)}")
    chunks = [dataset[i : i + chunk] for i in range(0, len(dataset), chunk)]
    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(chunks) == 1:
        results = [_transform_chunk(c, config) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _transform_chunk(c, config), chunks))
    return [t for part in results for t in part]


def stack_tokens(tokens: Sequence[MultiViewTokens]) -> np.ndarray:
    return np.stack([t.tokens for t in tokens])
