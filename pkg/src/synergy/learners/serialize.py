"""Versioned binary model files with exact float64 weights.

Layout::

    SYNMODEL <version>\\n
    <header length in bytes>\\n
    <JSON header: kind, config echo, seed, array manifest, extra>
    <raw little-endian array bytes, in manifest order>

Output bytes depend only on the model, so saving twice yields identical files.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from synergy.errors import FormatError
from synergy.learners.gnn import GNN, GnnConfig
from synergy.learners.linear import ElasticNet, ElasticNetConfig
from synergy.learners.neural import FCNN, FcnnConfig
from synergy.learners.trees import (
    DecisionTree,
    ForestConfig,
    GbmConfig,
    GradientBoosting,
    RandomForest,
    TreeConfig,
)

MAGIC = b"SYNMODEL"
VERSION = 1

MODEL_CLASSES = {
    "enet": ElasticNet,
    "tree": DecisionTree,
    "rf": RandomForest,
    "gbm": GradientBoosting,
    "fcnn": FCNN,
    "gnn": GNN,
}


def config_from_dict(kind, data):
    if kind == "enet":
        return ElasticNetConfig(**data)
    if kind == "tree":
        return TreeConfig(**data)
    if kind == "rf":
        return ForestConfig(**{**data, "tree": TreeConfig(**data["tree"])})
    if kind == "gbm":
        return GbmConfig(**{**data, "tree": TreeConfig(**data["tree"])})
    if kind == "fcnn":
        return FcnnConfig(**{**data, "hidden": tuple(data["hidden"])})
    if kind == "gnn":
        head = data["head"]
        return GnnConfig(**{**data, "head": FcnnConfig(**{**head, "hidden": tuple(head["hidden"])})})
    raise FormatError(f"unknown learner kind {kind!r}")


def _seed_of(config):
    return getattr(config, "seed", None)


def dumps(model) -> bytes:
    arrays = model.state()
    names = sorted(arrays)
    manifest = []
    blobs = []
    for name in names:
        arr = np.asarray(arrays[name])
        dtype = "<i8" if arr.dtype.kind in "iu" else "<f8"
        arr = np.ascontiguousarray(arr, dtype=dtype)
        manifest.append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = {
        "kind": model.kind,
        "config": asdict(model.config),
        "seed": _seed_of(model.config),
        "arrays": manifest,
        "extra": model.extra_state() if hasattr(model, "extra_state") else {},
    }
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + f" {VERSION}\n{len(head)}\n".encode() + head + b"".join(blobs)


def loads(data: bytes):
    try:
        first, length, rest = data.split(b"\n", 2)
        magic, version = first.split(b" ")
        if magic != MAGIC:
            raise ValueError
        if int(version) != VERSION:
            raise FormatError(f"unsupported model file version {int(version)}")
        n = int(length)
        header = json.loads(rest[:n].decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError("not a model file") from None
    offset = n
    arrays = {}
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        size = count * dtype.itemsize
        chunk = rest[offset:offset + size]
        if len(chunk) != size:
            raise FormatError("truncated model file")
        arr = np.frombuffer(chunk, dtype=dtype).reshape(entry["shape"])
        arrays[entry["name"]] = arr.astype(np.int64 if dtype.kind == "i" else np.float64)
        offset += size
    kind = header["kind"]
    config = config_from_dict(kind, header["config"])
    cls = MODEL_CLASSES[kind]
    if kind == "gnn":
        return cls.from_state(config, arrays, header.get("extra"))
    return cls.from_state(config, arrays)


def save_model(model, path) -> None:
    Path(path).write_bytes(dumps(model))


def load_model(path):
    return loads(Path(path).read_bytes())
