"""Versioned flat binary checkpoints.

Layout (all little-endian)::

    b"RFCK"  u32 version  u32 meta_len  meta_len bytes of UTF-8 JSON  u32 count
    count x [ u16 name_len  name  u8 ndim  ndim x u32 dims  float32 data ]
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"RFCK"
VERSION = 1


def save_checkpoint(path, named_arrays: list[tuple[str, np.ndarray]], meta: dict | None = None) -> None:
    meta_bytes = json.dumps(meta or {}, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(meta_bytes)))
        f.write(meta_bytes)
        f.write(struct.pack("<I", len(named_arrays)))
        for name, arr in named_arrays:
            raw = name.encode()
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    version, meta_len = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    pos = 12
    meta = json.loads(data[pos : pos + meta_len])
    pos += meta_len
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    arrays = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos : pos + nlen].decode()
        pos += nlen
        (ndim,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        n = int(np.prod(shape, dtype=np.int64))
        arrays[name] = np.frombuffer(data, dtype="<f4", count=n, offset=pos).reshape(shape).copy()
        pos += 4 * n
    return arrays, meta


def save_model(path, model, meta: dict | None = None) -> None:
    save_checkpoint(path, [(n, p.value) for n, p in model.named_params()], meta)


def load_into(model, arrays: dict[str, np.ndarray]) -> None:
    for name, p in model.named_params():
        if name not in arrays:
            raise ValueError(f"checkpoint is missing parameter {name!r}")
        if arrays[name].shape != p.value.shape:
            raise ValueError(f"parameter {name!r}: checkpoint shape {arrays[name].shape} != model {p.value.shape}")
        p.value[...] = arrays[name]
