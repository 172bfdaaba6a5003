"""Sampler benchmark on the oracle scene.

Renders the analytic radiance field under each sampling strategy and
reports field evaluations, wall time, and PSNR against a dense uniform
reference.  Measuring on the oracle field isolates the sampling question
from model quality; seed 0 is the canonical mean-face scene.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .config import DEFAULT, RenderConfig
from .geometry import camera_from_z_cam, generate_rays
from .synthscene import (
    identity_to_proxy,
    make_oracle_field,
    neutral_latents,
    sample_latents,
    sample_rng,
    trace_depth_grid,
)
from .volrender import SamplerSpec, psnr, render_field

REFERENCE_K = 1024


def bench_scene(scene_seed: int, id_dim: int = 64):
    if scene_seed == 0:
        latents = neutral_latents(id_dim)
    else:
        latents = sample_latents(sample_rng(scene_seed, 0), id_dim=id_dim)
    return identity_to_proxy(latents.z_id), latents


def parse_sampler(token: str) -> dict:
    """"uniform:64", "hierarchical:64+128", "depth_guided:16"."""
    token = token.strip()
    if ":" not in token:
        raise ValueError(f"sampler {token!r} needs parameters, e.g. uniform:64")
    kind, arg = token.split(":", 1)
    kind = kind.strip()
    if kind == "uniform":
        return {"kind": "uniform", "k": int(arg)}
    if kind == "hierarchical":
        if "+" not in arg:
            raise ValueError("hierarchical wants coarse+fine, e.g. hierarchical:64+128")
        nc, nf = arg.split("+", 1)
        return {"kind": "hierarchical", "n_coarse": int(nc), "n_fine": int(nf)}
    if kind == "depth_guided":
        return {"kind": "depth_guided", "k": int(arg)}
    raise ValueError(f"unknown sampler {kind!r}")


def sampler_label(s: dict) -> str:
    if s["kind"] == "hierarchical":
        return f"hierarchical:{s['n_coarse']}+{s['n_fine']}"
    return f"{s['kind']}:{s['k']}"


def run_bench(scene_seed: int, resolution: int, samplers: list[str],
              cfg: RenderConfig = DEFAULT, repeats: int = 1) -> dict:
    scene, latents = bench_scene(scene_seed)
    field = make_oracle_field(scene, latents, cfg)
    camera = camera_from_z_cam(latents.z_cam, cfg)
    rays = generate_rays(camera, resolution, resolution)

    # ground-truth depth Gaussian for the depth-guided sampler
    t, hit = trace_depth_grid(scene, latents.z_exp, rays.origins, rays.directions,
                              rays.t_near, rays.t_far)
    d_mu = np.where(hit, t, 0.5 * (rays.t_near + rays.t_far))
    d_std = np.where(hit, 2.0 * cfg.eps_surf, 0.25 * (rays.t_far - rays.t_near))

    def timed_render(spec: SamplerSpec):
        best = np.inf
        out = None
        for _ in range(max(1, repeats)):
            t0 = time.perf_counter()
            out = render_field(field, camera, spec, resolution, resolution, cfg)
            best = min(best, time.perf_counter() - t0)
        return out, best

    ref_spec = SamplerSpec("uniform", k=REFERENCE_K, seed=1)
    reference, ref_time = timed_render(ref_spec)

    rows = [{
        "sampler": f"uniform:{REFERENCE_K}",
        "kind": "uniform",
        "params": {"k": REFERENCE_K},
        "reference": True,
        "evals_per_pixel": REFERENCE_K,
        "field_evals": reference.field_evals,
        "wall_time_per_image": ref_time,
        "psnr_db": psnr(reference.image, reference.image),
    }]
    for i, token in enumerate(samplers):
        s = parse_sampler(token)
        if s["kind"] == "depth_guided":
            spec = SamplerSpec("depth_guided", k=s["k"], d_mu=d_mu, d_std=d_std,
                               seed=2 + i)
        elif s["kind"] == "hierarchical":
            spec = SamplerSpec("hierarchical", n_coarse=s["n_coarse"],
                               n_fine=s["n_fine"], seed=2 + i)
        else:
            spec = SamplerSpec("uniform", k=s["k"], seed=2 + i)
        out, wall = timed_render(spec)
        rows.append({
            "sampler": sampler_label(s),
            "kind": s["kind"],
            "params": {k: v for k, v in s.items() if k != "kind"},
            "reference": False,
            "evals_per_pixel": spec.evals_per_pixel(),
            "field_evals": out.field_evals,
            "wall_time_per_image": wall,
            "psnr_db": psnr(out.image, reference.image),
        })
    rows.sort(key=lambda r: (r["field_evals"], r["sampler"]))
    return {
        "version": 1,
        "scene_seed": scene_seed,
        "resolution": resolution,
        "kernel_backend": kernels.BACKEND,
        "rows": rows,
    }
