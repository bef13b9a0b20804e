"""Time-series container, linear interpolation and window grids."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class TimeSeries:
    """Possibly irregular samples ``values[i]`` observed at ``timestamps[i]``."""

    timestamps: np.ndarray
    values: np.ndarray
    label: Optional[float] = None

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=np.float64).reshape(-1)
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != t.size:
            raise ValueError(f"values shape {v.shape} does not match {t.size} timestamps")
        if t.size < 2:
            raise ValueError("a series needs at least 2 points")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("series contains non-finite entries")
        if np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.timestamps.size

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def start(self) -> float:
        return float(self.timestamps[0])

    @property
    def end(self) -> float:
        return float(self.timestamps[-1])


@dataclass(frozen=True)
class WindowGrid:
    boundaries: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=np.float64).reshape(-1)
        if b.size < 2 or np.any(np.diff(b) <= 0):
            raise ValueError("grid needs >= 2 strictly increasing boundaries")
        object.__setattr__(self, "boundaries", b)

    @property
    def num_windows(self) -> int:
        return self.boundaries.size - 1


def _interp(series: TimeSeries, times: np.ndarray) -> np.ndarray:
    ts, vs = series.timestamps, series.values
    i = np.clip(np.searchsorted(ts, times, side="right") - 1, 0, ts.size - 2)
    w = ((times - ts[i]) / (ts[i + 1] - ts[i]))[:, None]
    out = (1.0 - w) * vs[i] + w * vs[i + 1]
    # exact at knots
    j = np.searchsorted(ts, times)
    at_knot = (j < ts.size) & (ts[np.minimum(j, ts.size - 1)] == times)
    out[at_knot] = vs[j[at_knot]]
    return out


def interpolate_at(series: TimeSeries, t: float) -> np.ndarray:
    """Value of the piecewise-linear interpolant at time ``t``."""
    if not series.start <= t <= series.end:
        raise ValueError(f"t={t} outside [{series.start}, {series.end}]")
    return _interp(series, np.array([t], dtype=np.float64))[0]


def uniform_grid(series: TimeSeries, num_windows: int) -> WindowGrid:
    if num_windows < 1:
        raise ValueError(f"num_windows must be >= 1, got {num_windows}")
    b = np.linspace(series.start, series.end, num_windows + 1)
    # pin endpoints exactly
    b[0], b[-1] = series.start, series.end
    return WindowGrid(b)


def slice_window(series: TimeSeries, a: float, b: float) -> np.ndarray:
    """Points of the interpolant on ``[a, b]``: both endpoints plus interior knots."""
    if not a < b:
        raise ValueError(f"empty window [{a}, {b}]")
    ts = series.timestamps
    lo = int(np.searchsorted(ts, a, side="right"))
    hi = int(np.searchsorted(ts, b, side="left"))
    return np.vstack([interpolate_at(series, a), series.values[lo:hi], interpolate_at(series, b)])


def window_increments(series: TimeSeries, grid: WindowGrid) -> np.ndarray:
    """Increments of every window slice, zero-padded to a common count.

    Returns an array of shape ``(num_windows, m, d)``. Window ``k`` holds the
    increments of :func:`slice_window` over ``[t_{k-1}, t_k]`` followed by
    zeros, which act as exact no-ops in a signature fold.
    """
    ts, vs = series.timestamps, series.values
    bnd = grid.boundaries
    if bnd[0] < ts[0] or bnd[-1] > ts[-1]:
        raise ValueError("grid extends beyond the series time range")
    bvals = _interp(series, bnd)
    lo = np.searchsorted(ts, bnd[:-1], side="right")
    counts = np.searchsorted(ts, bnd[1:], side="left") - lo
    m = int(counts.max()) + 1
    # row k: start boundary, interior knots, then the end boundary repeated
    j = np.arange(1, m + 1)
    idx = np.minimum(lo[:, None] + j - 1, ts.size - 1)
    interior = (j <= counts[:, None])[..., None]
    pts = np.empty((bnd.size - 1, m + 1, vs.shape[1]))
    pts[:, 0] = bvals[:-1]
    pts[:, 1:] = np.where(interior, vs[idx], bvals[1:, None, :])
    return np.diff(pts, axis=1)


def random_drop(series: TimeSeries, keep_fraction: float, rng: np.random.Generator) -> TimeSeries:
    """Keep a uniform random subset of interior points; endpoints always survive.

    The number kept is ``round(keep_fraction * len(series))`` including both
    endpoints.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    n = len(series)
    n_keep = int(round(keep_fraction * n))
    if n_keep < 2:
        raise ValueError(f"keep_fraction={keep_fraction} leaves fewer than 2 of {n} points")
    if n_keep >= n:
        return series
    interior = rng.choice(np.arange(1, n - 1), size=n_keep - 2, replace=False)
    idx = np.concatenate([[0], np.sort(interior), [n - 1]])
    return TimeSeries(series.timestamps[idx], series.values[idx], series.label)
