"""Run configuration: nested dataclasses backed by an INI file."""
from __future__ import annotations

import configparser
import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .datasets import SineConfig
from .multiview import SignatureConfig
from .nn.model import ModelConfig

TASKS = ("sine-classify", "csv-classify", "csv-regress")
MODEL_KINDS = ("rformer", "raw")


@dataclass(frozen=True)
class OptimConfig:
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0
    micro_batch: int = 0  # 0 disables gradient accumulation
    workers: int = 1
    standardize: bool = True


@dataclass(frozen=True)
class DropConfig:
    train_drop: float = 0.0
    eval_drop: float = 0.5
    eval_draws: int = 5

    def __post_init__(self):
        for name in ("train_drop", "eval_drop"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {v}")


@dataclass(frozen=True)
class IOConfig:
    data_dir: str = "data"
    out_dir: str = "run"
    # CSV tasks: long-format file plus column names
    csv_path: str = ""
    targets_path: str = ""
    value_columns: str = ""
    time_column: str = "time"
    id_column: str = "series_id"
    target_column: str = ""


@dataclass(frozen=True)
class RunConfig:
    task: str = "sine-classify"
    model_kind: str = "rformer"
    data: SineConfig = field(default_factory=SineConfig)
    signature: SignatureConfig = field(default_factory=SignatureConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    drop: DropConfig = field(default_factory=DropConfig)
    io: IOConfig = field(default_factory=IOConfig)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        if self.model.d_model % self.model.heads:
            raise ValueError(f"model.heads={self.model.heads} does not divide model.d_model={self.model.d_model}")

    @property
    def is_classification(self) -> bool:
        return self.task != "csv-regress"


SECTIONS = ("data", "signature", "model", "optim", "drop", "io")

# defaults for the synthetic frequency task and for heart-rate regression
PRESETS = {
    "sine": {"signature": {"depth": 2, "num_windows": 75, "mode": "multi-view"}, "optim": {"lr": 1e-3}},
    "hr": {
        "task": "csv-regress",
        "signature": {"depth": 4, "num_windows": 75, "mode": "local", "time_augment": True},
        "optim": {"lr": 1e-3},
    },
}


def _hints(cls) -> dict:
    return typing.get_type_hints(cls)


def _parse(value: str, tp):
    origin = typing.get_origin(tp)
    if tp is bool:
        v = value.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if tp in (int, float, str):
        return tp(value)
    if origin is tuple:
        args = typing.get_args(tp)
        return tuple(args[0](x) for x in value.replace(",", " ").split())
    raise TypeError(f"unsupported config type {tp}")


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Return ``cfg`` with ``{"section": {"key": value}}`` or top-level values replaced.

    String values are parsed according to the field's declared type.
    """
    top = {}
    hints = _hints(RunConfig)
    for key, val in overrides.items():
        if key in SECTIONS:
            section = getattr(cfg, key)
            sec_hints = _hints(type(section))
            changes = {}
            for k, v in val.items():
                if k not in sec_hints:
                    raise ValueError(f"unknown config field {key}.{k}")
                changes[k] = _parse(v, sec_hints[k]) if isinstance(v, str) and sec_hints[k] is not str else v
            top[key] = dataclasses.replace(section, **changes)
        elif key in hints:
            top[key] = val
        else:
            raise ValueError(f"unknown config field {key}")
    return dataclasses.replace(cfg, **top)


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise FileNotFoundError(path)
    overrides: dict = {}
    if parser.has_section("run"):
        run = dict(parser["run"])
        if "preset" in run:
            overrides = _merge(overrides, PRESETS[run.pop("preset")])
        overrides.update(run)
    for sec in SECTIONS:
        if parser.has_section(sec):
            overrides = _merge(overrides, {sec: dict(parser[sec])})
    return apply_overrides(RunConfig(), overrides)


def _merge(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def dump_config(cfg: RunConfig, path) -> None:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser["run"] = {"task": cfg.task, "model_kind": cfg.model_kind}
    for sec in SECTIONS:
        parser[sec] = {f.name: _format(getattr(getattr(cfg, sec), f.name)) for f in dataclasses.fields(getattr(cfg, sec))}
    with open(Path(path), "w") as f:
        parser.write(f)


def config_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_from_dict(d: dict) -> RunConfig:
    sections = {}
    for sec in SECTIONS:
        cls = type(getattr(RunConfig(), sec))
        vals = dict(d[sec])
        for f in dataclasses.fields(cls):
            if isinstance(vals.get(f.name), list):
                vals[f.name] = tuple(vals[f.name])
        sections[sec] = cls(**vals)
    return RunConfig(task=d["task"], model_kind=d["model_kind"], **sections)
