"""Synthetic frequency-classification data and CSV ingestion."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .series import TimeSeries


@dataclass(frozen=True)
class SineConfig:
    """Generator for ``g(t) sin(w t + phase) + noise`` series labelled by ``w``.

    ``g`` is ``1 + c1 s + c2 s^2 + c3 s^3`` with ``s = t / T`` and
    ``c_j ~ U(-trend, trend)``; the phase is ``U(0, 2 pi) * phase_scale``;
    the additive noise is i.i.d. ``N(0, noise**2)`` per step.
    """

    num_samples: int = 1000
    num_classes: int = 100
    seq_len: int = 2000
    t_end: float = 6.0
    omega_min: float = 10.0
    omega_max: float = 500.0
    trend: float = 0.5
    phase_scale: float = 1.0
    noise: float = 0.05
    seed: int = 0
    split: tuple[float, float, float] = (0.7, 0.15, 0.15)

    def __post_init__(self):
        if self.num_classes < 1 or self.num_classes > self.num_samples:
            raise ValueError(f"need 1 <= num_classes <= num_samples, got {self.num_classes}, {self.num_samples}")
        if not self.omega_min < self.omega_max:
            raise ValueError(f"need omega_min < omega_max, got {self.omega_min}, {self.omega_max}")
        if self.t_end <= 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.seq_len < 2:
            raise ValueError(f"seq_len must be >= 2, got {self.seq_len}")
        if abs(sum(self.split) - 1.0) > 1e-9 or min(self.split) < 0:
            raise ValueError(f"split fractions must be non-negative and sum to 1, got {self.split}")

    def omegas(self) -> np.ndarray:
        if self.num_classes == 1:
            return np.array([self.omega_min])
        return self.omega_min + np.arange(self.num_classes) * (self.omega_max - self.omega_min) / (self.num_classes - 1)


@dataclass
class Dataset:
    series: list[TimeSeries]
    splits: dict[str, np.ndarray] = field(default_factory=dict)
    num_classes: Optional[int] = None

    def subset(self, name: str) -> list[TimeSeries]:
        return [self.series[i] for i in self.splits[name]]

    def labels(self, name: Optional[str] = None) -> np.ndarray:
        items = self.series if name is None else self.subset(name)
        return np.array([s.label for s in items])


def split_indices(n: int, fractions: Sequence[float], seed: int) -> dict[str, np.ndarray]:
    """Seeded shuffle into train/val/test index arrays."""
    perm = np.random.default_rng([seed, 0x5EED]).permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    return {
        "train": np.sort(perm[:n_train]),
        "val": np.sort(perm[n_train : n_train + n_val]),
        "test": np.sort(perm[n_train + n_val :]),
    }


def _sine_sample(cfg: SineConfig, index: int, omega: float, t: np.ndarray) -> np.ndarray:
    rng = np.random.default_rng([cfg.seed, index])
    s = t / cfg.t_end
    c = rng.uniform(-cfg.trend, cfg.trend, size=3)
    g = 1.0 + c[0] * s + c[1] * s**2 + c[2] * s**3
    phase = rng.uniform(0.0, 2 * np.pi) * cfg.phase_scale
    eta = rng.normal(0.0, 1.0, size=t.size) * cfg.noise
    return g * np.sin(omega * t + phase) + eta


def gen_sine_dataset(cfg: SineConfig) -> Dataset:
    """Balanced dataset; sample ``i`` has class ``i % num_classes``.

    Every sample draws from its own rng stream keyed by ``(seed, i)``.
    """
    t = np.linspace(0.0, cfg.t_end, cfg.seq_len)
    omegas = cfg.omegas()
    series = []
    for i in range(cfg.num_samples):
        c = i % cfg.num_classes
        series.append(TimeSeries(t, _sine_sample(cfg, i, omegas[c], t), c))
    return Dataset(series, split_indices(cfg.num_samples, cfg.split, cfg.seed), cfg.num_classes)


# -- CSV ---------------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    """Long-format CSV layout: one row per observation.

    ``id_column`` groups rows into series (omit for a single series).
    ``time_column`` omitted means the row index within a group is the time.
    The target comes from ``target_column`` (constant within a group) or from
    a separate ``targets_path`` CSV with columns ``id_column`` and ``target``.
    """

    value_columns: tuple[str, ...]
    time_column: Optional[str] = "time"
    id_column: Optional[str] = "series_id"
    target_column: Optional[str] = None
    targets_path: Optional[str] = None
    delimiter: str = ","
    sort_time: bool = False
    integer_target: bool = False


class SchemaError(ValueError):
    pass


def _float(cell: str, where: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise SchemaError(f"{where}: non-numeric cell {cell!r}") from None


def load_csv(path, schema: CsvSchema) -> list[TimeSeries]:
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f, delimiter=schema.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        col = {name: i for i, name in enumerate(header)}
        wanted = list(schema.value_columns)
        for opt in (schema.time_column, schema.id_column, schema.target_column):
            if opt is not None:
                wanted.append(opt)
        missing = [c for c in wanted if c not in col]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {missing}")
        if schema.target_column is None and schema.targets_path is None:
            raise SchemaError("schema needs a target_column or a targets_path")
        groups: dict[str, list[list[float]]] = {}
        targets: dict[str, float] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            key = row[col[schema.id_column]] if schema.id_column else "0"
            rows = groups.setdefault(key, [])
            t = _float(row[col[schema.time_column]], f"{path}:{lineno}") if schema.time_column else float(len(rows))
            rows.append([t] + [_float(row[col[c]], f"{path}:{lineno}") for c in schema.value_columns])
            if schema.target_column is not None:
                y = _float(row[col[schema.target_column]], f"{path}:{lineno}")
                if targets.setdefault(key, y) != y:
                    raise SchemaError(f"{path}:{lineno}: target changes within series {key!r}")
    if schema.targets_path is not None:
        targets = _read_targets(Path(schema.targets_path), schema)
    out = []
    for key, rows in groups.items():
        if key not in targets:
            raise SchemaError(f"no target for series {key!r}")
        arr = np.array(rows)
        if np.any(np.diff(arr[:, 0]) <= 0):
            if not schema.sort_time:
                raise SchemaError(f"series {key!r}: time is not strictly increasing (use sort_time)")
            arr = arr[np.argsort(arr[:, 0], kind="stable")]
            if np.any(np.diff(arr[:, 0]) == 0):
                raise SchemaError(f"series {key!r}: duplicate timestamps")
        y = targets[key]
        out.append(TimeSeries(arr[:, 0], arr[:, 1:], int(y) if schema.integer_target else y))
    return out


def _read_targets(path: Path, schema: CsvSchema) -> dict[str, float]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f, delimiter=schema.delimiter)
        key_col = schema.id_column or "series_id"
        if reader.fieldnames is None or key_col not in reader.fieldnames or "target" not in reader.fieldnames:
            raise SchemaError(f"{path}: targets file needs columns {key_col!r} and 'target'")
        return {row[key_col]: _float(row["target"], str(path)) for row in reader}


def dump_csv(dataset: Dataset, out_dir, cfg: Optional[SineConfig] = None) -> dict[str, Path]:
    """Write ``data.csv``, ``targets.csv`` and ``split.json`` into ``out_dir``.

    Floats use ``repr`` so loading reproduces the values exactly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = dataset.series[0].dim
    cols = [f"x{j}" for j in range(d)]
    with open(out / "data.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["series_id", "time", *cols])
        for i, s in enumerate(dataset.series):
            for t, v in zip(s.timestamps, s.values):
                w.writerow([i, repr(float(t)), *(repr(float(x)) for x in v)])
    with open(out / "targets.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["series_id", "target"])
        for i, s in enumerate(dataset.series):
            w.writerow([i, s.label])
    manifest = {k: [int(i) for i in v] for k, v in dataset.splits.items()}
    manifest["num_classes"] = dataset.num_classes
    manifest["value_columns"] = cols
    if cfg is not None:
        manifest["generator"] = asdict(cfg)
    (out / "split.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return {"data": out / "data.csv", "targets": out / "targets.csv", "split": out / "split.json"}


def load_dataset_dir(data_dir, integer_target: bool = True) -> Dataset:
    """Inverse of :func:`dump_csv`."""
    data_dir = Path(data_dir)
    manifest = json.loads((data_dir / "split.json").read_text())
    schema = CsvSchema(
        value_columns=tuple(manifest["value_columns"]),
        targets_path=str(data_dir / "targets.csv"),
        integer_target=integer_target,
    )
    series = load_csv(data_dir / "data.csv", schema)
    splits = {k: np.array(manifest[k], dtype=np.int64) for k in ("train", "val", "test")}
    return Dataset(series, splits, manifest.get("num_classes"))
