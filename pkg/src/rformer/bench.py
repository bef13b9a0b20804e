"""Seconds-per-epoch benchmark: signature tokens vs raw-sample tokens."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import time
import tracemalloc
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import DropConfig, OptimConfig, RunConfig
from .datasets import SineConfig, gen_sine_dataset
from .nn import Adam
from .train import build_model, drop_series, featurize, input_shape, targets, train_epoch

log = logging.getLogger(__name__)

FIELDS = (
    "model_kind",
    "seq_len",
    "num_windows",
    "tokens",
    "token_dim",
    "params",
    "samples",
    "batch_size",
    "epochs",
    "sec_per_epoch",
    "sec_std",
    "sig_sec_per_epoch",
    "peak_mem_mb",
    "tokens_per_sec",
    "status",
)


@dataclass
class BenchRecord:
    model_kind: str
    seq_len: int
    num_windows: int
    tokens: int
    token_dim: int
    params: int
    samples: int
    batch_size: int
    epochs: int
    sec_per_epoch: float
    sec_std: float
    sig_sec_per_epoch: float
    peak_mem_mb: Optional[float]
    tokens_per_sec: float
    status: str = "ok"

    def row(self) -> dict:
        return {f: getattr(self, f) for f in FIELDS}


def bench_data(seq_len: int, samples: int, seed: int = 0) -> list:
    cfg = SineConfig(num_samples=samples, num_classes=min(10, samples), seq_len=seq_len, seed=seed)
    return gen_sine_dataset(cfg).series


def _micro_batch(cfg: RunConfig, tokens: int, budget_mb: float) -> int:
    # attention probabilities + scores dominate: heads * tokens^2 per sample per layer, a few copies
    per_sample = 4 * cfg.model.layers * cfg.model.heads * tokens * tokens * np.dtype(cfg.model.dtype).itemsize
    return int(max(1, min(cfg.optim.batch_size, budget_mb * 2**20 // max(per_sample, 1))))


def bench_epoch(
    model_kind: str,
    seq_len: int,
    cfg: RunConfig,
    samples: int = 32,
    epochs: int = 5,
    warmup: int = 1,
    memory_budget_mb: float = 1024.0,
    measure_memory: bool = True,
) -> BenchRecord:
    """Time ``epochs`` training epochs after ``warmup`` unmeasured ones.

    Dataset generation is excluded. For ``rformer`` with ``train_drop > 0``
    the per-epoch drop + signature computation is included in the epoch time
    and also reported on its own; with no drop, tokens are computed once
    outside the timed region.
    """
    if epochs < 1:
        raise ValueError("need at least one measured epoch")
    cfg = dataclasses.replace(cfg, model_kind=model_kind)
    series = bench_data(seq_len, samples, cfg.optim.seed)
    y = targets(series, cfg)
    max_len, width = input_shape(cfg, series[0].dim, seq_len)
    tokens = max_len
    micro = _micro_batch(cfg, tokens, memory_budget_mb)
    cfg = dataclasses.replace(cfg, optim=dataclasses.replace(cfg.optim, micro_batch=micro))
    record = BenchRecord(model_kind, seq_len, cfg.signature.num_windows, tokens, width, 0, samples,
                         cfg.optim.batch_size, epochs, float("nan"), float("nan"), 0.0, None, float("nan"))
    try:
        model = build_model(cfg, width, int(y.max()) + 1, max_len)
        record.params = model.num_params()
        opt = Adam(model.params(), lr=cfg.optim.lr)
        dynamic = cfg.drop.train_drop > 0
        static = None if dynamic else featurize(series, cfg).astype(model.dtype)

        def one_epoch(*key: int) -> tuple[float, float]:
            rng = np.random.default_rng([cfg.optim.seed, *key])
            t0 = time.perf_counter()
            x = featurize(drop_series(series, cfg.drop.train_drop, rng), cfg).astype(model.dtype) if dynamic else static
            t1 = time.perf_counter()
            train_epoch(model, opt, x, y, cfg, rng)
            return time.perf_counter() - t0, t1 - t0

        for e in range(warmup):
            one_epoch(0xB0, e)  # separate stream for warmup draws
        times, sig_times = [], []
        for e in range(epochs):
            total, sig = one_epoch(e + 1)
            times.append(total)
            sig_times.append(sig)
        if measure_memory:
            tracemalloc.start()
            try:
                one_epoch(epochs + 1)
                record.peak_mem_mb = tracemalloc.get_traced_memory()[1] / 2**20
            finally:
                tracemalloc.stop()
    except MemoryError:
        record.status = "oom"
        return record
    record.sec_per_epoch = float(np.mean(times))
    record.sec_std = float(np.std(times, ddof=1)) if len(times) > 1 else 0.0
    record.sig_sec_per_epoch = float(np.mean(sig_times))
    record.tokens_per_sec = samples * tokens / record.sec_per_epoch
    log.info("%s L=%d: %.3fs/epoch", model_kind, seq_len, record.sec_per_epoch)
    return record


def speedup(raw: BenchRecord, rformer: BenchRecord) -> float:
    """Raw seconds per epoch divided by rformer seconds per epoch."""
    return raw.sec_per_epoch / rformer.sec_per_epoch


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render_markdown(records: Sequence[BenchRecord]) -> str:
    """Seconds per epoch, one row per model and one column per sequence length."""
    lengths = sorted({r.seq_len for r in records})
    kinds = list(dict.fromkeys(r.model_kind for r in records))
    cell = {(r.model_kind, r.seq_len): r for r in records}
    lines = ["| Model | " + " | ".join(f"L={n}" for n in lengths) + " |",
             "|---|" + "---|" * len(lengths)]
    for k in kinds:
        vals = []
        for n in lengths:
            r = cell.get((k, n))
            vals.append("-" if r is None else (r.status if r.status != "ok" else f"{r.sec_per_epoch:.3f}"))
        lines.append(f"| {k} | " + " | ".join(vals) + " |")
    if "raw" in kinds and "rformer" in kinds:
        vals = []
        for n in lengths:
            a, b = cell.get(("raw", n)), cell.get(("rformer", n))
            ok = a is not None and b is not None and a.status == b.status == "ok"
            vals.append(f"{speedup(a, b):.2f}x" if ok else "-")
        lines.append("| Speedup | " + " | ".join(vals) + " |")
    return "\n".join(lines) + "\n"


def emit_report(records: Sequence[BenchRecord], fmt: str, path=None) -> str:
    """Serialise records as ``csv``, ``json`` or ``markdown``; writes ``path`` if given."""
    if not records:
        raise ValueError("no benchmark records to report")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=FIELDS, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow({k: _fmt(v) for k, v in r.row().items()})
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps([r.row() for r in records], indent=1) + "\n"
    elif fmt in ("markdown", "md"):
        text = render_markdown(records)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def default_bench_config(num_windows: int = 75, depth: int = 2, batch_size: int = 32, seed: int = 0) -> RunConfig:
    base = RunConfig()
    return dataclasses.replace(
        base,
        signature=dataclasses.replace(base.signature, num_windows=num_windows, depth=depth),
        optim=OptimConfig(batch_size=batch_size, epochs=1, seed=seed),
        drop=DropConfig(train_drop=0.5),
    )
