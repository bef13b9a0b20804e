"""Training and evaluation loops for signature-token and raw-token models."""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import RunConfig, config_from_dict, config_to_dict, dump_config
from .multiview import batch_transform, stack_tokens, token_dim
from .nn import Adam, TokenTransformer, cross_entropy, load_checkpoint, load_into, mse, save_model
from .series import TimeSeries, random_drop
from .signature import time_augment

log = logging.getLogger(__name__)


def drop_series(series: Sequence[TimeSeries], drop: float, rng: np.random.Generator) -> list[TimeSeries]:
    """Independent :func:`random_drop` of each series (fresh draw per series)."""
    if drop <= 0.0:
        return list(series)
    return [random_drop(s, 1.0 - drop, rng) for s in series]


def featurize(series: Sequence[TimeSeries], cfg: RunConfig) -> np.ndarray:
    """Model inputs of shape ``(N, tokens, features)``.

    For ``rformer`` these are the multi-view signature tokens. For ``raw``
    every sample is a token (time prepended when ``time_augment`` is set);
    all series must then have the same length.
    """
    if cfg.model_kind == "rformer":
        return stack_tokens(batch_transform(series, cfg.signature, workers=cfg.optim.workers))
    if cfg.signature.time_augment:
        series = [time_augment(s) for s in series]
    lengths = {len(s) for s in series}
    if len(lengths) > 1:
        raise ValueError(f"raw-token model needs equal-length series, got lengths {sorted(lengths)}")
    return np.stack([s.values for s in series])


def input_shape(cfg: RunConfig, dim: int, length: int) -> tuple[int, int]:
    """(max tokens, feature width) for a dataset of ``dim`` channels and ``length`` samples."""
    d = dim + (1 if cfg.signature.time_augment else 0)
    if cfg.model_kind == "rformer":
        return cfg.signature.num_windows, token_dim(d, cfg.signature.depth, cfg.signature.mode)
    return length, d


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        flat = x.reshape(-1, x.shape[-1])
        std = flat.std(axis=0)
        return cls(flat.mean(axis=0), np.where(std > 1e-12, std, 1.0))

    @classmethod
    def identity(cls, width: int) -> "Standardizer":
        return cls(np.zeros(width), np.ones(width))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


@dataclass
class Trained:
    model: TokenTransformer
    scaler: Standardizer
    cfg: RunConfig
    history: list[dict] = field(default_factory=list)


def build_model(cfg: RunConfig, in_dim: int, out_dim: int, max_len: int) -> TokenTransformer:
    return TokenTransformer(in_dim, out_dim, max_len, cfg.model, seed=cfg.optim.seed)


def targets(series: Sequence[TimeSeries], cfg: RunConfig) -> np.ndarray:
    y = np.array([s.label for s in series])
    return y.astype(np.int64) if cfg.is_classification else y.astype(np.float64)


def score(model: TokenTransformer, x: np.ndarray, y: np.ndarray, cfg: RunConfig) -> float:
    """Accuracy for classification, RMSE for regression."""
    out = model.predict(x, batch_size=max(cfg.optim.batch_size, 1))
    if cfg.is_classification:
        return float(np.mean(out.argmax(axis=1) == y))
    return float(np.sqrt(np.mean((out.reshape(-1).astype(np.float64) - y) ** 2)))


def _better(a: float, b: Optional[float], cfg: RunConfig) -> bool:
    if b is None:
        return True
    return a > b if cfg.is_classification else a < b


def train_epoch(model, opt, x, y, cfg: RunConfig, rng: np.random.Generator) -> float:
    bs = cfg.optim.batch_size
    micro = cfg.optim.micro_batch or bs
    order = rng.permutation(len(x))
    losses = []
    for i in range(0, len(order), bs):
        idx = order[i : i + bs]
        total = 0.0
        for j in range(0, len(idx), micro):
            part = idx[j : j + micro]
            # micro-batch losses are means; weight so the summed grads equal the full-batch mean
            w = len(part) / len(idx)
            out = model.forward(x[part])
            loss, g = cross_entropy(out, y[part]) if cfg.is_classification else mse(out, y[part])
            model.backward((g * w).astype(model.dtype))
            total += loss * w
        opt.step()
        losses.append(total)
    return float(np.mean(losses))


def fit(
    cfg: RunConfig,
    train: Sequence[TimeSeries],
    val: Sequence[TimeSeries] = (),
    out_dim: Optional[int] = None,
    out_dir: Optional[Path] = None,
) -> Trained:
    """Train a model; returns the best-validation model (last epoch if no val set).

    With ``drop.train_drop > 0`` the training series are re-subsampled and
    re-featurised every epoch, and validation sees one fixed draw of the same
    drop; otherwise features are computed once.
    """
    seed = cfg.optim.seed
    y_train = targets(train, cfg)
    if out_dim is None:
        out_dim = int(y_train.max()) + 1 if cfg.is_classification else 1
    max_len, width = input_shape(cfg, train[0].dim, len(train[0]))
    model = build_model(cfg, width, out_dim, max_len)
    opt = Adam(model.params(), lr=cfg.optim.lr)

    static = featurize(train, cfg)
    scaler = Standardizer.fit(static) if cfg.optim.standardize else Standardizer.identity(width)
    x_static = scaler(static).astype(model.dtype)
    x_val = None
    if len(val):
        # validate under the training-time drop, one fixed draw
        val_rng = np.random.default_rng([seed, 0x7A1])
        x_val = scaler(featurize(drop_series(val, cfg.drop.train_drop, val_rng), cfg)).astype(model.dtype)
    y_val = targets(val, cfg) if len(val) else None

    result = Trained(model, scaler, cfg)
    best, best_state = None, None
    log_rows = []
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        dump_config(cfg, out_dir / "config.ini")
    for epoch in range(1, cfg.optim.epochs + 1):
        t0 = time.perf_counter()
        rng = np.random.default_rng([seed, epoch])
        if cfg.drop.train_drop > 0:
            x = scaler(featurize(drop_series(train, cfg.drop.train_drop, rng), cfg)).astype(model.dtype)
        else:
            x = x_static
        loss = train_epoch(model, opt, x, y_train, cfg, rng)
        val_metric = score(model, x_val, y_val, cfg) if x_val is not None else float("nan")
        seconds = time.perf_counter() - t0
        row = {"epoch": epoch, "train_loss": loss, "val_metric": val_metric, "seconds": seconds}
        log_rows.append(row)
        log.info("epoch %d loss %.4f val %.4f (%.2fs)", epoch, loss, val_metric, seconds)
        if x_val is None or _better(val_metric, best, cfg):
            best = val_metric if x_val is not None else None
            best_state = [p.value.copy() for p in model.params()]
            if out_dir is not None:
                save_run(result, out_dir / "model.ckpt", out_dim)
    if best_state is not None:
        for p, v in zip(model.params(), best_state):
            p.value[...] = v
    result.history = log_rows
    if out_dir is not None:
        if cfg.optim.epochs == 0:
            save_run(result, out_dir / "model.ckpt", out_dim)
        with open(out_dir / "metrics.csv", "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=["epoch", "train_loss", "val_metric", "seconds"], lineterminator="\n")
            w.writeheader()
            w.writerows(log_rows)
    return result


def evaluate(
    trained: Trained, series: Sequence[TimeSeries], drop: float = 0.0, draws: int = 5, seed: int = 0
) -> tuple[float, float]:
    """Mean and std of the metric over ``draws`` seeded random drops (one pass if ``drop == 0``)."""
    cfg = trained.cfg
    y = targets(series, cfg)
    n = 1 if drop <= 0 else draws
    vals = []
    for draw in range(n):
        rng = np.random.default_rng([seed, 0xE7A1, draw])
        x = trained.scaler(featurize(drop_series(series, drop, rng), cfg)).astype(trained.model.dtype)
        vals.append(score(trained.model, x, y, cfg))
    return float(np.mean(vals)), float(np.std(vals))


def save_run(trained: Trained, path: Path, out_dim: int) -> None:
    m = trained.model
    meta = {
        "config": config_to_dict(trained.cfg),
        "in_dim": m.in_dim,
        "out_dim": out_dim,
        "max_len": m.max_len,
        "scaler_mean": trained.scaler.mean.tolist(),
        "scaler_std": trained.scaler.std.tolist(),
    }
    save_model(path, m, meta)


def load_run(path) -> Trained:
    arrays, meta = load_checkpoint(path)
    cfg = config_from_dict(meta["config"])
    model = build_model(cfg, meta["in_dim"], meta["out_dim"], meta["max_len"])
    load_into(model, arrays)
    scaler = Standardizer(np.array(meta["scaler_mean"]), np.array(meta["scaler_std"]))
    return Trained(model, scaler, cfg)
