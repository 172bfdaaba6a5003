"""Vectorized numpy implementations of the hot kernels.

This is the fallback backend; the numba backend in ``numba_impl`` mirrors
these functions ray by ray.  Each ray/point follows the same arithmetic
sequence in both backends, so results agree to rounding differences in the
underlying libm calls.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .common import (
    HIT,
    K_SOCKET,
    K_UNION,
    MAX_BISECT,
    MAX_MARCH,
    MIN_STEP,
    MISS,
    NORMAL_H,
    OVERFLOW,
    SAFETY,
    SHADE_BAND,
    SURF_TOL,
)


def _ellipsoid(p: np.ndarray, radii: np.ndarray) -> np.ndarray:
    # Quilez's bound-preserving approximation; exact on spheres.
    q = p / radii
    k0 = np.linalg.norm(q, axis=-1)
    k1 = np.linalg.norm(q / radii, axis=-1)
    out = np.where(k1 > 1e-12, k0 * (k0 - 1.0) / np.where(k1 > 1e-12, k1, 1.0),
                   -np.min(radii))
    return out


def _smooth_union(d1, d2, k):
    h = np.clip(0.5 + 0.5 * (d2 - d1) / k, 0.0, 1.0)
    return d2 + (d1 - d2) * h - k * h * (1.0 - h)


def _smooth_subtract(d1, d2, k):
    # carve the region of d2 out of d1
    h = np.clip(0.5 - 0.5 * (d2 + d1) / k, 0.0, 1.0)
    return d1 + (-d2 - d1) * h + k * h * (1.0 - h)


def sdf_points(points, params, expr_centers, expr_sigmas, expr_amps, z_exp):
    """Signed distance of the face proxy at each point, (N, 3) -> (N,)."""
    p = np.asarray(points, dtype=np.float64)
    squeeze = p.ndim == 1
    p = p.reshape(-1, 3)
    head = _ellipsoid(p, params[0:3])
    nose = _ellipsoid(p - params[6:9], params[3:6])
    d = _smooth_union(head, nose, K_UNION)
    for i in range(2):
        center = params[11 + 3 * i:14 + 3 * i]
        socket = np.linalg.norm(p - center, axis=-1) - params[9 + i]
        d = _smooth_subtract(d, socket, K_SOCKET)
    # expression displacement, linear in z_exp
    diff = p[:, None, :] - expr_centers[None, :, :]
    g = np.exp(-0.5 * np.sum(diff * diff, axis=-1) / (expr_sigmas * expr_sigmas))
    d = d + g @ (z_exp * expr_amps)
    return d[0] if squeeze else d


def _sdf_flat(flat_points, params, expr_centers, expr_sigmas, expr_amps, z_exp):
    return sdf_points(flat_points, params, expr_centers, expr_sigmas, expr_amps, z_exp)


def trace_rays(origins, dirs, t_near, t_far, params, expr_centers, expr_sigmas,
               expr_amps, z_exp):
    """Sphere-trace each ray to its first surface crossing.

    Returns (t, status): t is the hit distance (np.inf on miss/overflow),
    status uses the MISS/HIT/OVERFLOW codes.
    """
    origins = np.asarray(origins, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    n = origins.shape[0]
    t = np.full(n, t_near)
    prev = np.full(n, t_near)
    result = np.full(n, np.inf)
    status = np.full(n, OVERFLOW, dtype=np.int8)
    marching = np.ones(n, dtype=bool)
    br_a = np.zeros(n)
    br_b = np.zeros(n)
    bracketed = np.zeros(n, dtype=bool)

    def sdf_at(mask, tt):
        pts = origins[mask] + tt[mask, None] * dirs[mask]
        return _sdf_flat(pts, params, expr_centers, expr_sigmas, expr_amps, z_exp)

    for _ in range(MAX_MARCH):
        if not marching.any():
            break
        d = sdf_at(marching, t)
        idx = np.flatnonzero(marching)
        hit = (d >= 0.0) & (d < SURF_TOL)
        neg = d < 0.0
        hit_idx = idx[hit]
        result[hit_idx] = t[hit_idx]
        status[hit_idx] = HIT
        marching[hit_idx] = False
        neg_idx = idx[neg & ~hit]
        br_a[neg_idx] = prev[neg_idx]
        br_b[neg_idx] = t[neg_idx]
        bracketed[neg_idx] = True
        marching[neg_idx] = False
        go_idx = idx[~hit & ~neg]
        prev[go_idx] = t[go_idx]
        t[go_idx] = t[go_idx] + np.maximum(SAFETY * d[~hit & ~neg], MIN_STEP)
        out = go_idx[t[go_idx] > t_far]
        status[out] = MISS
        marching[out] = False

    if bracketed.any():
        a = br_a[bracketed]
        b = br_b[bracketed]
        sub_origins = origins[bracketed]
        sub_dirs = dirs[bracketed]
        mid = 0.5 * (a + b)
        res = mid.copy()
        open_ = np.ones(a.shape[0], dtype=bool)
        for _ in range(MAX_BISECT):
            if not open_.any():
                break
            mid = 0.5 * (a + b)
            pts = sub_origins[open_] + mid[open_, None] * sub_dirs[open_]
            fm = _sdf_flat(pts, params, expr_centers, expr_sigmas, expr_amps, z_exp)
            oi = np.flatnonzero(open_)
            conv = np.abs(fm) < SURF_TOL
            res[oi] = mid[oi]
            open_[oi[conv]] = False
            pos = oi[(~conv) & (fm > 0.0)]
            negm = oi[(~conv) & (fm <= 0.0)]
            a[pos] = mid[pos]
            b[negm] = mid[negm]
        result[bracketed] = res
        status[bracketed] = HIT
    return result, status


def _albedo(points, params):
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    blotch = params[20] * np.sin(7.0 * x) * np.sin(9.0 * y) \
        + params[21] * np.sin(5.0 * x + 3.0 * z)
    return np.clip(params[17:20][None, :] * (1.0 + blotch)[:, None], 0.0, 1.0)


def _normals(points, params, expr_centers, expr_sigmas, expr_amps, z_exp):
    n = points.shape[0]
    offs = np.zeros((n, 6, 3))
    for ax in range(3):
        offs[:, 2 * ax, ax] = NORMAL_H
        offs[:, 2 * ax + 1, ax] = -NORMAL_H
    d = _sdf_flat((points[:, None, :] + offs).reshape(-1, 3), params,
                  expr_centers, expr_sigmas, expr_amps, z_exp).reshape(n, 6)
    grad = np.stack([d[:, 0] - d[:, 1], d[:, 2] - d[:, 3], d[:, 4] - d[:, 5]], axis=1)
    norm = np.linalg.norm(grad, axis=1, keepdims=True)
    return grad / np.where(norm > 1e-300, norm, 1.0)


def _shade(normals, views, points, params, light_dir, light_rgb, ambient_rgb):
    albedo = _albedo(points, params)
    ndl = np.maximum(np.sum(normals * light_dir, axis=1), 0.0)
    h = light_dir[None, :] + views
    hn = np.linalg.norm(h, axis=1, keepdims=True)
    h = h / np.where(hn > 1e-300, hn, 1.0)
    ndh = np.maximum(np.sum(normals * h, axis=1), 0.0)
    spec = np.where(ndl > 0.0, params[22] * ndh ** params[23], 0.0)
    rgb = ambient_rgb[None, :] * albedo \
        + light_rgb[None, :] * (albedo * ndl[:, None] + spec[:, None])
    return np.clip(rgb, 0.0, 1.0)


def field_eval(points, view_dirs, params, expr_centers, expr_sigmas, expr_amps,
               z_exp, light_dir, light_rgb, ambient_rgb, sigma_max, eps_surf):
    """Radiance-field view of the proxy scene: logistic density around the
    surface, color from Blinn-Phong at the nearest-surface projection.

    Points farther than SHADE_BAND * eps_surf from the surface get zero
    color; their density makes the contribution negligible either way.
    """
    points = np.asarray(points, dtype=np.float64)
    view_dirs = np.asarray(view_dirs, dtype=np.float64)
    d = _sdf_flat(points, params, expr_centers, expr_sigmas, expr_amps, z_exp)
    sigma = sigma_max * expit(-d / eps_surf)
    rgb = np.zeros((points.shape[0], 3))
    near = np.abs(d) <= SHADE_BAND * eps_surf
    if near.any():
        pn = points[near]
        n1 = _normals(pn, params, expr_centers, expr_sigmas, expr_amps, z_exp)
        psurf = pn - d[near, None] * n1
        n2 = _normals(psurf, params, expr_centers, expr_sigmas, expr_amps, z_exp)
        rgb[near] = _shade(n2, -view_dirs[near], psurf, params,
                           light_dir, light_rgb, ambient_rgb)
    return rgb, sigma


def composite_rays(ts, rgbs, sigmas, t_far):
    """Front-to-back compositing over sorted per-ray samples.

    Returns (color, alpha, expected_depth, weights).  The last interval is
    capped at min(t_far, t_K + mean delta).
    """
    ts = np.asarray(ts, dtype=np.float64)
    rgbs = np.asarray(rgbs, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64)
    n, k = ts.shape
    deltas = np.empty_like(ts)
    if k > 1:
        deltas[:, :-1] = ts[:, 1:] - ts[:, :-1]
        mean_d = (ts[:, -1] - ts[:, 0]) / (k - 1)
        cap = np.minimum(t_far, ts[:, -1] + mean_d)
    else:
        cap = np.full(n, t_far)
    deltas[:, -1] = np.maximum(cap - ts[:, -1], 0.0)
    optical = sigmas * deltas
    cum = np.cumsum(optical, axis=1)
    excl = np.concatenate([np.zeros((n, 1)), cum[:, :-1]], axis=1)
    trans = np.exp(-excl)
    weights = trans * (-np.expm1(-optical))
    color = np.sum(weights[:, :, None] * rgbs, axis=1)
    alpha = np.sum(weights, axis=1)
    wdepth = np.sum(weights * ts, axis=1)
    depth = np.where(alpha > 0.0, wdepth / np.where(alpha > 0.0, alpha, 1.0), 0.0)
    return color, alpha, depth, weights
