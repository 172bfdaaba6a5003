"""Checkpoint container: magic "RFCK", u32 version, length-prefixed JSON
metadata, then raw little-endian f64 parameter data in metadata order.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .tensor import Tensor

MAGIC = b"RFCK"
VERSION = 1


def save_checkpoint(path, params: dict, meta: dict | None = None):
    """Write named arrays plus metadata. ``params`` order defines data order."""
    meta = dict(meta or {})
    layers = []
    blobs = []
    for name, p in params.items():
        arr = np.asarray(p.data if isinstance(p, Tensor) else p, dtype=np.float64)
        layers.append({"name": name, "shape": list(arr.shape)})
        blobs.append(arr.astype("<f8").tobytes())
    meta["layers"] = layers
    meta_bytes = json.dumps(meta, sort_keys=False, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        for b in blobs:
            fh.write(b)


def load_checkpoint(path):
    """Read a checkpoint back as (params dict of ndarrays, metadata dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"bad checkpoint magic {magic!r}")
        version = struct.unpack("<I", fh.read(4))[0]
        if version != VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        meta_len = struct.unpack("<I", fh.read(4))[0]
        meta = json.loads(fh.read(meta_len).decode("utf-8"))
        params = {}
        for layer in meta["layers"]:
            shape = tuple(layer["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError("truncated checkpoint data")
            params[layer["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        trailing = fh.read(1)
        if trailing:
            raise ValueError("trailing bytes after checkpoint data")
    return params, meta
