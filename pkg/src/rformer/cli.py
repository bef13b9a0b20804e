"""Command-line interface: ``rformer {gen,sig,train,eval,gradcheck,bench}``.

Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .config import RunConfig, apply_overrides, dump_config, load_config
from .datasets import CsvSchema, Dataset, SchemaError, dump_csv, gen_sine_dataset, load_csv, load_dataset_dir, split_indices
from .multiview import batch_transform
from .nn import ModelConfig, TokenTransformer, model_grad_check
from .train import evaluate, fit, load_run

log = logging.getLogger("rformer")


class ValidationError(Exception):
    pass


def _overrides_from_args(args) -> dict:
    out: dict = {}

    def put(section, key, value):
        if value is not None:
            out.setdefault(section, {})[key] = value

    for item in getattr(args, "set", None) or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValidationError(f"--set expects section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        section, key = lhs.split(".", 1)
        if section == "run":
            out[key] = value
        else:
            put(section, key, value)
    for section, key, attr in [
        ("data", "num_classes", "classes"),
        ("data", "num_samples", "samples"),
        ("data", "seq_len", "seq_len"),
        ("data", "seed", "data_seed"),
        ("data", "omega_min", "omega_min"),
        ("data", "omega_max", "omega_max"),
        ("signature", "depth", "depth"),
        ("signature", "num_windows", "windows"),
        ("signature", "mode", "mode"),
        ("signature", "time_augment", "time_augment"),
        ("optim", "epochs", "epochs"),
        ("optim", "lr", "lr"),
        ("optim", "seed", "seed"),
        ("optim", "batch_size", "batch_size"),
        ("optim", "workers", "workers"),
        ("drop", "train_drop", "train_drop"),
        ("io", "data_dir", "data"),
        ("io", "out_dir", "out"),
    ]:
        put(section, key, getattr(args, attr, None))
    if getattr(args, "kind", None):
        out["model_kind"] = args.kind
    if getattr(args, "task", None):
        out["task"] = args.task
    return out


def resolve_config(args) -> RunConfig:
    """Config file (or defaults), then preset, then flags; flags win."""
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    try:
        return apply_overrides(cfg, _overrides_from_args(args))
    except (TypeError, ValueError) as e:
        raise ValidationError(str(e)) from e


def load_task_data(cfg: RunConfig) -> Dataset:
    if cfg.task == "sine-classify":
        path = Path(cfg.io.data_dir)
        if not (path / "split.json").exists():
            raise ValidationError(f"io.data_dir: no generated dataset at {path} (run `rformer gen` first)")
        return load_dataset_dir(path)
    if not cfg.io.csv_path:
        raise ValidationError("io.csv_path is required for CSV tasks")
    cols = tuple(c.strip() for c in cfg.io.value_columns.split(",") if c.strip())
    if not cols:
        raise ValidationError("io.value_columns is required for CSV tasks")
    schema = CsvSchema(
        value_columns=cols,
        time_column=cfg.io.time_column or None,
        id_column=cfg.io.id_column or None,
        target_column=cfg.io.target_column or None,
        targets_path=cfg.io.targets_path or None,
        integer_target=cfg.is_classification,
    )
    series = load_csv(cfg.io.csv_path, schema)
    n_classes = int(max(s.label for s in series)) + 1 if cfg.is_classification else None
    return Dataset(series, split_indices(len(series), cfg.data.split, cfg.data.seed), n_classes)


def _out_dim(cfg: RunConfig, ds: Dataset) -> int:
    return int(ds.num_classes) if cfg.is_classification else 1


# -- subcommands ------------------------------------------------------------


def cmd_gen(args) -> int:
    args.data_seed = args.seed
    cfg = resolve_config(args)
    ds = gen_sine_dataset(cfg.data)
    paths = dump_csv(ds, cfg.io.data_dir, cfg.data)
    print(f"wrote {len(ds.series)} series to {paths['data'].parent}")
    return 0


def cmd_sig(args) -> int:
    cfg = resolve_config(args)
    ds = load_task_data(cfg)
    toks = batch_transform(ds.series, cfg.signature, workers=cfg.optim.workers)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    width = toks[0].tokens.shape[1]
    with open(out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["series_id", "window", *(f"f{j}" for j in range(width))])
        for i, t in enumerate(toks):
            for k, row in enumerate(t.tokens):
                w.writerow([i, k, *(repr(float(v)) for v in row)])
    print(f"wrote {len(toks)} x {toks[0].tokens.shape} tokens to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    ds = load_task_data(cfg)
    out = Path(cfg.io.out_dir)
    trained = fit(cfg, ds.subset("train"), ds.subset("val"), out_dim=_out_dim(cfg, ds), out_dir=out)
    last = trained.history[-1] if trained.history else None
    if last:
        print(f"epoch {last['epoch']}: train loss {last['train_loss']:.4f}, val {last['val_metric']:.4f}")
    print(f"checkpoint: {out / 'model.ckpt'}")
    return 0


def cmd_eval(args) -> int:
    trained = load_run(args.checkpoint)
    cfg = trained.cfg
    if args.data:
        cfg = dataclasses.replace(cfg, io=dataclasses.replace(cfg.io, data_dir=args.data))
    ds = load_task_data(cfg)
    series = ds.subset(args.split)
    mean, std = evaluate(trained, series, drop=args.drop, draws=args.draws, seed=args.seed)
    name = "accuracy" if cfg.is_classification else "rmse"
    result = {"split": args.split, "drop": args.drop, "draws": args.draws if args.drop > 0 else 1,
              name: mean, f"{name}_std": std}
    print(json.dumps(result))
    if args.output:
        Path(args.output).write_text(json.dumps(result, indent=1) + "\n")
    return 0


def cmd_gradcheck(args) -> int:
    cfg = ModelConfig(d_model=args.d_model, heads=args.heads, layers=args.layers, ff_hidden=args.ff_hidden, dtype="float64")
    model = TokenTransformer(args.token_dim, args.classes, args.tokens, cfg, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    x = rng.normal(size=(args.batch, args.tokens, args.token_dim))
    y = rng.integers(0, args.classes, size=args.batch)
    if args.corrupt_backward:
        # negative control: perturb one analytic gradient
        inner = model.embed.backward

        def corrupted(g):
            gx = inner(g)
            model.embed.weight.grad *= 1.01
            return gx

        model.embed.backward = corrupted
    err = model_grad_check(model, x, y, "classify")
    ok = err < args.tol
    print(f"max relative error {err:.3e} ({'ok' if ok else 'FAIL'}, tol {args.tol:g})")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    cfg = bench_mod.default_bench_config(args.windows, args.depth, args.batch_size, args.seed)
    records = []
    for kind in args.kinds:
        for n in args.lengths:
            records.append(bench_mod.bench_epoch(kind, n, cfg, samples=args.samples, epochs=args.epochs,
                                                 memory_budget_mb=args.memory_mb))
    text = bench_mod.emit_report(records, args.format, args.output)
    if not args.output:
        print(text, end="")
    else:
        print(bench_mod.render_markdown(records), end="")
    return 0


# -- parser -----------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override any config field")
    p.add_argument("--seed", type=int)
    p.add_argument("--data", help="dataset directory")


def _add_sig(p):
    p.add_argument("--depth", type=int)
    p.add_argument("--windows", type=int)
    p.add_argument("--mode", choices=["multi-view", "local", "global"])
    g = p.add_mutually_exclusive_group()
    g.add_argument("--time-augment", dest="time_augment", action="store_const", const=True)
    g.add_argument("--no-time-augment", dest="time_augment", action="store_const", const=False)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rformer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate the synthetic frequency dataset")
    _add_common(p)
    p.add_argument("--out", dest="data", help="output directory")
    p.add_argument("--classes", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seq-len", type=int)
    p.add_argument("--omega-min", type=float)
    p.add_argument("--omega-max", type=float)
    p.set_defaults(func=cmd_gen, data_seed=None)

    p = sub.add_parser("sig", help="export multi-view signature tokens as CSV")
    _add_common(p)
    _add_sig(p)
    p.add_argument("--task", choices=["sine-classify", "csv-classify", "csv-regress"])
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sig)

    p = sub.add_parser("train", help="train a model")
    _add_common(p)
    _add_sig(p)
    p.add_argument("--task", choices=["sine-classify", "csv-classify", "csv-regress"])
    p.add_argument("--kind", choices=["rformer", "raw"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--train-drop", type=float)
    p.add_argument("--out", help="run output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--data", help="dataset directory (defaults to the one used for training)")
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--drop", type=float, default=0.0)
    p.add_argument("--draws", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the model gradients (float64)")
    p.add_argument("--tokens", type=int, default=4)
    p.add_argument("--token-dim", type=int, default=6)
    p.add_argument("--d-model", type=int, default=8)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--ff-hidden", type=int, default=16)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--batch", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--corrupt-backward", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("bench", help="seconds per epoch, rformer vs raw attention")
    p.add_argument("--lengths", type=int, nargs="+", default=[1000, 2000, 4000])
    p.add_argument("--kinds", nargs="+", choices=["rformer", "raw"], default=["rformer", "raw"])
    p.add_argument("--windows", type=int, default=75)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--memory-mb", type=float, default=1024.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["csv", "json", "markdown"], default="csv")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValidationError, SchemaError, ValueError, FileNotFoundError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
