"""Numba-compiled kernels, ray-by-ray mirrors of ``numpy_impl``.

Compiled lazily on first call, cached on disk.  Parallel execution is left
off on purpose: outputs must not depend on worker count.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

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

_OPTS = dict(cache=True, fastmath=False)


@njit(**_OPTS)
def _sdf_one(px, py, pz, params, expr_centers, expr_sigmas, expr_amps, z_exp):
    # head ellipsoid
    qx = px / params[0]
    qy = py / params[1]
    qz = pz / params[2]
    k0 = math.sqrt(qx * qx + qy * qy + qz * qz)
    k1 = math.sqrt((qx / params[0]) ** 2 + (qy / params[1]) ** 2 + (qz / params[2]) ** 2)
    if k1 > 1e-12:
        head = k0 * (k0 - 1.0) / k1
    else:
        head = -min(params[0], min(params[1], params[2]))
    # nose ellipsoid
    nx = (px - params[6]) / params[3]
    ny = (py - params[7]) / params[4]
    nz = (pz - params[8]) / params[5]
    k0 = math.sqrt(nx * nx + ny * ny + nz * nz)
    k1 = math.sqrt((nx / params[3]) ** 2 + (ny / params[4]) ** 2 + (nz / params[5]) ** 2)
    if k1 > 1e-12:
        nose = k0 * (k0 - 1.0) / k1
    else:
        nose = -min(params[3], min(params[4], params[5]))
    h = 0.5 + 0.5 * (nose - head) / K_UNION
    if h < 0.0:
        h = 0.0
    elif h > 1.0:
        h = 1.0
    d = nose + (head - nose) * h - K_UNION * h * (1.0 - h)
    # carve the two eye sockets
    for i in range(2):
        cx = params[11 + 3 * i]
        cy = params[12 + 3 * i]
        cz = params[13 + 3 * i]
        socket = math.sqrt((px - cx) ** 2 + (py - cy) ** 2 + (pz - cz) ** 2) - params[9 + i]
        h = 0.5 - 0.5 * (socket + d) / K_SOCKET
        if h < 0.0:
            h = 0.0
        elif h > 1.0:
            h = 1.0
        d = d + (-socket - d) * h + K_SOCKET * h * (1.0 - h)
    # expression displacement
    for i in range(expr_centers.shape[0]):
        dx = px - expr_centers[i, 0]
        dy = py - expr_centers[i, 1]
        dz = pz - expr_centers[i, 2]
        s2 = expr_sigmas[i] * expr_sigmas[i]
        d += z_exp[i] * expr_amps[i] * math.exp(-0.5 * (dx * dx + dy * dy + dz * dz) / s2)
    return d


@njit(**_OPTS)
def sdf_points(points, params, expr_centers, expr_sigmas, expr_amps, z_exp):
    n = points.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = _sdf_one(points[i, 0], points[i, 1], points[i, 2], params,
                          expr_centers, expr_sigmas, expr_amps, z_exp)
    return out


@njit(**_OPTS)
def _trace_one(ox, oy, oz, dx, dy, dz, t_near, t_far, params,
               expr_centers, expr_sigmas, expr_amps, z_exp):
    t = t_near
    prev = t_near
    for _ in range(MAX_MARCH):
        d = _sdf_one(ox + t * dx, oy + t * dy, oz + t * dz, params,
                     expr_centers, expr_sigmas, expr_amps, z_exp)
        if 0.0 <= d < SURF_TOL:
            return t, HIT
        if d < 0.0:
            a = prev
            b = t
            mid = 0.5 * (a + b)
            for _ in range(MAX_BISECT):
                mid = 0.5 * (a + b)
                fm = _sdf_one(ox + mid * dx, oy + mid * dy, oz + mid * dz, params,
                              expr_centers, expr_sigmas, expr_amps, z_exp)
                if abs(fm) < SURF_TOL:
                    break
                if fm > 0.0:
                    a = mid
                else:
                    b = mid
            return mid, HIT
        prev = t
        step = SAFETY * d
        if step < MIN_STEP:
            step = MIN_STEP
        t = t + step
        if t > t_far:
            return np.inf, MISS
    return np.inf, OVERFLOW


@njit(**_OPTS)
def trace_rays(origins, dirs, t_near, t_far, params, expr_centers, expr_sigmas,
               expr_amps, z_exp):
    n = origins.shape[0]
    result = np.empty(n)
    status = np.empty(n, dtype=np.int8)
    for i in range(n):
        result[i], status[i] = _trace_one(
            origins[i, 0], origins[i, 1], origins[i, 2],
            dirs[i, 0], dirs[i, 1], dirs[i, 2],
            t_near, t_far, params, expr_centers, expr_sigmas, expr_amps, z_exp)
    return result, status


@njit(**_OPTS)
def _normal_one(px, py, pz, params, expr_centers, expr_sigmas, expr_amps, z_exp):
    gx = _sdf_one(px + NORMAL_H, py, pz, params, expr_centers, expr_sigmas, expr_amps, z_exp) \
        - _sdf_one(px - NORMAL_H, py, pz, params, expr_centers, expr_sigmas, expr_amps, z_exp)
    gy = _sdf_one(px, py + NORMAL_H, pz, params, expr_centers, expr_sigmas, expr_amps, z_exp) \
        - _sdf_one(px, py - NORMAL_H, pz, params, expr_centers, expr_sigmas, expr_amps, z_exp)
    gz = _sdf_one(px, py, pz + NORMAL_H, params, expr_centers, expr_sigmas, expr_amps, z_exp) \
        - _sdf_one(px, py, pz - NORMAL_H, params, expr_centers, expr_sigmas, expr_amps, z_exp)
    norm = math.sqrt(gx * gx + gy * gy + gz * gz)
    if norm < 1e-300:
        norm = 1.0
    return gx / norm, gy / norm, gz / norm


@njit(**_OPTS)
def field_eval(points, view_dirs, params, expr_centers, expr_sigmas, expr_amps,
               z_exp, light_dir, light_rgb, ambient_rgb, sigma_max, eps_surf):
    n = points.shape[0]
    rgb = np.zeros((n, 3))
    sigma = np.empty(n)
    band = SHADE_BAND * eps_surf
    for i in range(n):
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        d = _sdf_one(px, py, pz, params, expr_centers, expr_sigmas, expr_amps, z_exp)
        x = d / eps_surf
        if x > 500.0:
            sigma[i] = 0.0
        else:
            sigma[i] = sigma_max / (1.0 + math.exp(x))
        if abs(d) <= band:
            n1x, n1y, n1z = _normal_one(px, py, pz, params, expr_centers,
                                        expr_sigmas, expr_amps, z_exp)
            sx = px - d * n1x
            sy = py - d * n1y
            sz = pz - d * n1z
            nx, ny, nz = _normal_one(sx, sy, sz, params, expr_centers,
                                     expr_sigmas, expr_amps, z_exp)
            vx = -view_dirs[i, 0]
            vy = -view_dirs[i, 1]
            vz = -view_dirs[i, 2]
            blotch = params[20] * math.sin(7.0 * sx) * math.sin(9.0 * sy) \
                + params[21] * math.sin(5.0 * sx + 3.0 * sz)
            ndl = nx * light_dir[0] + ny * light_dir[1] + nz * light_dir[2]
            if ndl < 0.0:
                ndl = 0.0
            hx = light_dir[0] + vx
            hy = light_dir[1] + vy
            hz = light_dir[2] + vz
            hn = math.sqrt(hx * hx + hy * hy + hz * hz)
            if hn < 1e-300:
                hn = 1.0
            ndh = (nx * hx + ny * hy + nz * hz) / hn
            if ndh < 0.0:
                ndh = 0.0
            spec = params[22] * ndh ** params[23] if ndl > 0.0 else 0.0
            for c in range(3):
                alb = params[17 + c] * (1.0 + blotch)
                if alb < 0.0:
                    alb = 0.0
                elif alb > 1.0:
                    alb = 1.0
                val = ambient_rgb[c] * alb + light_rgb[c] * (alb * ndl + spec)
                if val < 0.0:
                    val = 0.0
                elif val > 1.0:
                    val = 1.0
                rgb[i, c] = val
    return rgb, sigma


@njit(**_OPTS)
def composite_rays(ts, rgbs, sigmas, t_far):
    n, k = ts.shape
    color = np.zeros((n, 3))
    alpha = np.empty(n)
    depth = np.empty(n)
    weights = np.empty((n, k))
    for i in range(n):
        if k > 1:
            mean_d = (ts[i, k - 1] - ts[i, 0]) / (k - 1)
            cap = min(t_far, ts[i, k - 1] + mean_d)
        else:
            cap = t_far
        excl = 0.0
        wsum = 0.0
        dsum = 0.0
        for j in range(k):
            if j < k - 1:
                delta = ts[i, j + 1] - ts[i, j]
            else:
                delta = cap - ts[i, k - 1]
                if delta < 0.0:
                    delta = 0.0
            optical = sigmas[i, j] * delta
            w = math.exp(-excl) * (-math.expm1(-optical))
            weights[i, j] = w
            color[i, 0] += w * rgbs[i, j, 0]
            color[i, 1] += w * rgbs[i, j, 1]
            color[i, 2] += w * rgbs[i, j, 2]
            dsum += w * ts[i, j]
            wsum += w
            excl += optical
        alpha[i] = wsum
        depth[i] = dsum / wsum if wsum > 0.0 else 0.0
    return color, alpha, depth, weights
