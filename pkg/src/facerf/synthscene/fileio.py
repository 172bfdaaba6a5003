"""On-disk sample formats: 8-bit PNG images and "RFD1" depth maps."""

from __future__ import annotations

import struct

import numpy as np
from PIL import Image

DEPTH_MAGIC = b"RFD1"


def write_png(path, image: np.ndarray):
    """Save a float image in [0,1], shape (H, W, 3), as 8-bit RGB."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got {img.shape}")
    data = np.rint(255.0 * np.clip(img, 0.0, 1.0)).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path, format="PNG")


def read_png(path) -> np.ndarray:
    with Image.open(path) as im:
        data = np.asarray(im.convert("RGB"), dtype=np.float64)
    return data / 255.0


def write_depth(path, depth: np.ndarray):
    """Magic "RFD1", u32 width, u32 height, row-major f32 LE; background +inf."""
    d = np.asarray(depth, dtype=np.float32)
    if d.ndim != 2:
        raise ValueError(f"expected (H, W) depth map, got {d.shape}")
    h, w = d.shape
    with open(path, "wb") as fh:
        fh.write(DEPTH_MAGIC)
        fh.write(struct.pack("<II", w, h))
        fh.write(d.astype("<f4").tobytes())


def read_depth(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DEPTH_MAGIC:
            raise ValueError(f"bad depth magic {magic!r}")
        w, h = struct.unpack("<II", fh.read(8))
        buf = fh.read(w * h * 4)
        if len(buf) != w * h * 4:
            raise ValueError("truncated depth file")
        return np.frombuffer(buf, dtype="<f4").reshape(h, w).astype(np.float64)
