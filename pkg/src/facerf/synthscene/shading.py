"""Blinn-Phong shading under one directional light plus ambient.

Written against the autodiff op layer, so the same code shades plain numpy
batches (dataset rendering) and differentiable tensors (gradient checks).
"""

from __future__ import annotations

import numpy as np

from .. import tensorgrad as tg


def light_direction(yaw, pitch):
    """Unit vector from the surface toward the light, from (yaw, pitch)."""
    if isinstance(yaw, tg.Tensor) or isinstance(pitch, tg.Tensor):
        return tg.stack([
            tg.sin(yaw) * tg.cos(pitch),
            tg.sin(pitch),
            tg.cos(yaw) * tg.cos(pitch),
        ])
    return np.array([
        np.sin(yaw) * np.cos(pitch),
        np.sin(pitch),
        np.cos(yaw) * np.cos(pitch),
    ])


def shade_blinn_phong(normal, view_dir, surface_point, z_ill, albedo,
                      k_s=0.3, shininess=20.0, clamp_output=True):
    """ambient*albedo + light*(albedo*max(0,n.l) + k_s*max(0,n.h)^p).

    ``normal`` and ``view_dir`` are unit vectors (arrays broadcast over a
    leading batch axis).  ``surface_point`` is accepted for parity with
    positional light models; the single light here is directional.
    """
    del surface_point
    light = light_direction(z_ill[0], z_ill[1])
    light_rgb = z_ill[2:5]
    ambient_rgb = z_ill[5:8]
    ndl = tg.relu(tg.tsum(normal * light, axis=-1, keepdims=True))
    h = light + view_dir
    h = h / tg.sqrt(tg.tsum(h * h, axis=-1, keepdims=True) + 1e-30)
    ndh = tg.relu(tg.tsum(normal * h, axis=-1, keepdims=True))
    # specular only on the lit side
    ndl_data = ndl.data if isinstance(ndl, tg.Tensor) else ndl
    gate = (ndl_data > 0.0).astype(np.float64)
    rgb = ambient_rgb * albedo + light_rgb * (albedo * ndl
                                              + k_s * gate * ndh ** shininess)
    if clamp_output:
        rgb = tg.clip(rgb, 0.0, 1.0)
    return rgb


def albedo_at(points, scene):
    """Procedural albedo of a proxy scene at surface points (N, 3)."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    blotch = scene.blotch[0] * np.sin(7.0 * x) * np.sin(9.0 * y) \
        + scene.blotch[1] * np.sin(5.0 * x + 3.0 * z)
    return np.clip(scene.albedo_base[None, :] * (1.0 + blotch)[:, None], 0.0, 1.0)
