"""Signatures of linear segments and piecewise-linear paths."""
from __future__ import annotations

from math import factorial
from typing import Callable

import numpy as np

from .tensor_algebra import TruncatedTensor, tensor_mul, unit


def segment_signature(delta, depth: int) -> TruncatedTensor:
    """Signature of the straight line with increment ``delta``.

    Level k is ``delta^{(x)k} / k!``, built by repeated outer products.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    delta = np.asarray(delta, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(delta)):
        raise ValueError("segment increment must be finite")
    levels = [np.ones(1)]
    for k in range(1, depth + 1):
        levels.append(np.outer(levels[-1], delta).reshape(-1) / k)
    return TruncatedTensor(delta.size, depth, tuple(levels))


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError(f"need at least 2 points of shape (N, d), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("path contains non-finite values")
    return pts


def path_signature(points, depth: int) -> TruncatedTensor:
    """Signature of the polyline through ``points`` (shape ``(N, d)``).

    Reference implementation: a strict left fold of :func:`tensor_mul` over
    the segment signatures. Zero increments are skipped.
    """
    pts = _as_points(points)
    sig = unit(pts.shape[1], depth)
    for delta in np.diff(pts, axis=0):
        if not delta.any():
            continue
        sig = tensor_mul(sig, segment_signature(delta, depth))
    return sig


def fold_increments(increments: np.ndarray, depth: int) -> list[np.ndarray]:
    """Vectorised left fold over the second-to-last axis of ``increments``.

    ``increments`` has shape ``(..., m, d)``; the result is a list of level
    blocks with shapes ``(..., d**k)`` for k = 0..depth. Each step multiplies
    the running signature by a segment signature in Horner form, using only
    elementwise broadcasting so the result for one leading index never
    depends on the others. Zero-padded increments are exact no-ops.
    """
    inc = np.asarray(increments, dtype=np.float64)
    *lead, m, d = inc.shape
    lead = tuple(lead)
    levels = [np.ones(lead + (1,))] + [np.zeros(lead + (d**k,)) for k in range(1, depth + 1)]
    for s in range(m):
        delta = inc[..., s, :]
        new = [levels[0]]
        for k in range(1, depth + 1):
            # ((S_0 D/k + S_1) D/(k-1) + S_2) ... D/1 + S_k
            acc = levels[0] * (delta / k)
            for i in range(1, k):
                acc = acc + levels[i]
                acc = (acc[..., :, None] * (delta[..., None, :] / (k - i))).reshape(
                    lead + (d ** (i + 1),)
                )
            new.append(acc + levels[k])
        levels = new
    return levels


def levels_mul(a: list[np.ndarray], b: list[np.ndarray], dim: int) -> list[np.ndarray]:
    """Batched :func:`tensor_mul` on level lists with arbitrary leading axes."""
    depth = len(a) - 1
    out = []
    for k in range(depth + 1):
        acc = a[k] * b[0]
        for j in range(k):
            prod = a[j][..., :, None] * b[k - j][..., None, :]
            acc = acc + prod.reshape(prod.shape[:-2] + (dim**k,))
        out.append(acc)
    return out


def time_augment(series):
    """Return a copy of ``series`` with time prepended as channel 0."""
    from .series import TimeSeries

    t = np.asarray(series.timestamps, dtype=np.float64)
    if np.any(np.diff(t) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    values = np.column_stack([t, series.values])
    return TimeSeries(t, values, series.label)


def numeric_signature_oracle(
    f: Callable[[np.ndarray], np.ndarray], t0: float, t1: float, depth: int, grid: int = 10_000
) -> TruncatedTensor:
    """Brute-force iterated integrals of a smooth path by nested Riemann sums.

    ``f`` maps an array of times to an ``(N, d)`` array. Derivatives are
    taken by central differences on the grid; every iterated integral is a
    nested left Riemann sum. Cost grows as O(grid * d**depth); test use only.
    """
    if depth > 3:
        raise ValueError("oracle supports depth <= 3")
    t = np.linspace(t0, t1, grid + 1)
    x = np.asarray(f(t), dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    d = x.shape[1]
    mid = 0.5 * (t[:-1] + t[1:])
    h = t[1] - t[0]
    # derivative at cell midpoints times dt
    eps = 1e-6 * max(1.0, abs(t1 - t0))
    dx = (np.asarray(f(mid + eps)).reshape(grid, d) - np.asarray(f(mid - eps)).reshape(grid, d)) / (
        2 * eps
    ) * h

    levels = [np.ones(1)]
    # level 1
    levels.append(dx.sum(axis=0))
    if depth >= 2:
        # I2[i,j] = sum_{u1<u2} dx[u1,i] dx[u2,j], plus the diagonal half-term
        c1 = np.cumsum(dx, axis=0) - dx
        i2 = np.zeros((d, d))
        for a in range(d):
            for b in range(d):
                i2[a, b] = np.sum(c1[:, a] * dx[:, b]) + 0.5 * np.sum(dx[:, a] * dx[:, b])
        levels.append(i2.reshape(-1))
    if depth >= 3:
        i3 = np.zeros((d, d, d))
        for a in range(d):
            inner1 = np.cumsum(dx[:, a]) - dx[:, a]
            for b in range(d):
                # running double integral strictly before u3
                step = inner1 * dx[:, b] + 0.5 * dx[:, a] * dx[:, b]
                inner2 = np.cumsum(step) - step
                for c in range(d):
                    i3[a, b, c] = np.sum(
                        inner2 * dx[:, c]
                        + 0.5 * inner1 * dx[:, b] * dx[:, c]
                        + dx[:, a] * dx[:, b] * dx[:, c] / 6.0
                    )
        levels.append(i3.reshape(-1))
    return TruncatedTensor.from_levels(d, levels)


def level_scale(depth: int) -> list[float]:
    """Per-level multipliers k! that undo the factorial decay of level k."""
    return [float(factorial(k)) for k in range(depth + 1)]
