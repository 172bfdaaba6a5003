"""Labeled synthetic dataset generation and the manifest format."""

from __future__ import annotations

import json
import logging
import os

import numpy as np

from ..config import DEFAULT, RenderConfig
from .fileio import write_depth, write_png
from .latents import DEFAULT_ID_DIM, sample_latents
from .proxy import identity_to_proxy
from .render import render_ground_truth

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Per-sample stream hashed from (seed, index); independent of ordering."""
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def generate_dataset(count: int, width: int, height: int, seed: int, out_dir,
                     force: bool = False, id_dim: int = DEFAULT_ID_DIM,
                     cfg: RenderConfig = DEFAULT) -> dict:
    """Render ``count`` labeled samples into ``out_dir`` and write a manifest.

    Output is fully determined by (count, width, height, seed, id_dim).
    Refuses a non-empty output directory unless ``force``.
    """
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    existing = [n for n in os.listdir(out_dir) if not n.startswith(".")]
    if existing and not force:
        raise FileExistsError(
            f"{out_dir} is not empty ({len(existing)} entries); pass force to overwrite")

    samples = []
    for i in range(count):
        rng = sample_rng(seed, i)
        latents = sample_latents(rng, id_dim=id_dim)
        scene = identity_to_proxy(latents.z_id)
        rendered = render_ground_truth(scene, latents, width, height, cfg)
        image_name = f"image_{i:05d}.png"
        depth_name = f"depth_{i:05d}.rfd"
        write_png(os.path.join(out_dir, image_name), rendered.image)
        write_depth(os.path.join(out_dir, depth_name), rendered.depth)
        entry = {"image": image_name, "depth": depth_name}
        entry.update(latents.to_dict())
        samples.append(entry)
        if count >= 20 and (i + 1) % max(1, count // 10) == 0:
            log.info("dataset: %d/%d samples", i + 1, count)

    manifest = {
        "version": 1,
        "seed": seed,
        "width": width,
        "height": height,
        "samples": samples,
    }
    write_manifest(os.path.join(out_dir, MANIFEST_NAME), manifest)
    return manifest


def write_manifest(path, manifest: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def load_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("version") != 1:
        raise ValueError("unsupported manifest version")
    for key in ("seed", "width", "height", "samples"):
        if key not in manifest:
            raise ValueError(f"manifest missing key {key!r}")
    return manifest
