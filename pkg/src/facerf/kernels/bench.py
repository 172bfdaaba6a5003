"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run as ``python -m facerf.kernels.bench [--points N] [--rays N] [--repeat R]``.
Prints a table of best wall times per kernel and the speedup.
"""

from __future__ import annotations

import argparse
import time

import numpy as np


def _time(fn, *args, repeat: int = 3) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run(points: int = 200_000, rays: int = 4096, k: int = 64, repeat: int = 3):
    from ..config import DEFAULT
    from ..synthscene import EXPR_CENTERS, EXPR_SIGMAS, mean_scene
    from . import numpy_impl
    try:
        from . import numba_impl
    except ImportError:
        print("numba unavailable; nothing to compare")
        return []

    scene = mean_scene()
    rng = np.random.default_rng(0)
    z_exp = rng.uniform(-1, 1, 20)
    scene_args = (scene.pack(), EXPR_CENTERS, EXPR_SIGMAS, scene.expr_amps, z_exp)

    pts = rng.uniform(-1.2, 1.2, (points, 3))
    dirs = rng.normal(size=(points, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.zeros((rays, 3))
    origins[:, 2] = DEFAULT.cam_radius
    rdirs = np.stack([rng.uniform(-0.3, 0.3, rays), rng.uniform(-0.3, 0.3, rays),
                      -np.ones(rays)], axis=1)
    rdirs /= np.linalg.norm(rdirs, axis=1, keepdims=True)
    light = np.array([0.0, 0.34, 0.94])
    lrgb = np.ones(3)
    argb = np.full(3, 0.3)
    ts = np.sort(rng.uniform(DEFAULT.t_near, DEFAULT.t_far, (rays, k)), axis=1)
    rgbs = rng.uniform(0, 1, (rays, k, 3))
    sigmas = rng.uniform(0, 30, (rays, k))

    cases = [
        ("sdf_points", lambda m: m.sdf_points(pts, *scene_args)),
        ("trace_rays", lambda m: m.trace_rays(origins, rdirs, DEFAULT.t_near,
                                              DEFAULT.t_far, *scene_args)),
        ("field_eval", lambda m: m.field_eval(pts, dirs, *scene_args, light, lrgb,
                                              argb, DEFAULT.sigma_max,
                                              DEFAULT.eps_surf)),
        ("composite_rays", lambda m: m.composite_rays(ts, rgbs, sigmas,
                                                      DEFAULT.t_far)),
    ]
    rows = []
    for name, fn in cases:
        fn(numba_impl)   # JIT warm-up outside the timed region
        t_np = _time(fn, numpy_impl, repeat=repeat)
        t_nb = _time(fn, numba_impl, repeat=repeat)
        rows.append((name, t_np, t_nb, t_np / t_nb))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--rays", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rows = run(points=args.points, rays=args.rays, repeat=args.repeat)
    if rows:
        print(f"{'kernel':<16} {'numpy':>10} {'numba':>10} {'speedup':>8}")
        for name, t_np, t_nb, sp in rows:
            print(f"{name:<16} {t_np:>9.4f}s {t_nb:>9.4f}s {sp:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
