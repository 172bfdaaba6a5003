"""Ground-truth rendering of the proxy scene and its radiance-field view."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .. import kernels
from ..config import DEFAULT, RenderConfig
from ..geometry import camera_from_z_cam, generate_rays
from .latents import SceneLatents
from .proxy import EXPR_CENTERS, EXPR_SIGMAS, FaceProxyScene, sdf
from .shading import albedo_at, light_direction, shade_blinn_phong
from .tracing import trace_depth_grid

NORMAL_H = 1e-4


@dataclass
class LabeledSample:
    image: np.ndarray     # (H, W, 3) in [0, 1]
    depth: np.ndarray     # (H, W) camera-space distance, +inf background
    latents: SceneLatents


def surface_normals(scene: FaceProxyScene, z_exp, points) -> np.ndarray:
    """Central-difference SDF normals at (N, 3) points."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = p.shape[0]
    offs = np.zeros((n, 6, 3))
    for ax in range(3):
        offs[:, 2 * ax, ax] = NORMAL_H
        offs[:, 2 * ax + 1, ax] = -NORMAL_H
    d = sdf(scene, z_exp, (p[:, None, :] + offs).reshape(-1, 3)).reshape(n, 6)
    grad = np.stack([d[:, 0] - d[:, 1], d[:, 2] - d[:, 3], d[:, 4] - d[:, 5]], axis=1)
    norm = np.linalg.norm(grad, axis=1, keepdims=True)
    return grad / np.where(norm > 1e-300, norm, 1.0)


def render_ground_truth(scene: FaceProxyScene, latents: SceneLatents,
                        width: int, height: int,
                        cfg: RenderConfig = DEFAULT) -> LabeledSample:
    """Sphere-traced, Blinn-Phong shaded image plus exact depth map."""
    camera = camera_from_z_cam(latents.z_cam, cfg)
    rays = generate_rays(camera, width, height)
    t, hit = trace_depth_grid(scene, latents.z_exp, rays.origins, rays.directions,
                              rays.t_near, rays.t_far)
    image = np.broadcast_to(cfg.background_rgb, (height * width, 3)).copy()
    if hit.any():
        pts = rays.origins[hit] + t[hit, None] * rays.directions[hit]
        normals = surface_normals(scene, latents.z_exp, pts)
        views = -rays.directions[hit]
        albedo = albedo_at(pts, scene)
        image[hit] = shade_blinn_phong(normals, views, pts, latents.z_ill, albedo,
                                       k_s=scene.k_s, shininess=scene.shininess)
    depth = np.where(hit, t, np.inf)
    return LabeledSample(image.reshape(height, width, 3),
                         depth.reshape(height, width), latents)


def oracle_field(scene: FaceProxyScene, latents: SceneLatents, point, view_dir,
                 cfg: RenderConfig = DEFAULT):
    """Continuous radiance-field view of the scene at one point.

    Density is sigma_max * logistic(-sdf/eps_surf); color comes from shading
    the nearest-surface projection of the point.
    """
    rgb, sigma = _field_batch(scene, latents, np.asarray(point)[None, :],
                              np.asarray(view_dir)[None, :], cfg)
    return rgb[0], float(sigma[0])


def _field_batch(scene, latents, points, view_dirs, cfg):
    light = light_direction(latents.z_ill[0], latents.z_ill[1])
    rgb, sigma = kernels.field_eval(
        np.ascontiguousarray(points, dtype=np.float64),
        np.ascontiguousarray(view_dirs, dtype=np.float64),
        scene.pack(), EXPR_CENTERS, EXPR_SIGMAS, scene.expr_amps,
        np.ascontiguousarray(latents.z_exp),
        light, np.ascontiguousarray(latents.z_ill[2:5]),
        np.ascontiguousarray(latents.z_ill[5:8]),
        cfg.sigma_max, cfg.eps_surf)
    return rgb, sigma


def make_oracle_field(scene: FaceProxyScene, latents: SceneLatents,
                      cfg: RenderConfig = DEFAULT):
    """Batched field closure (points, view_dirs) -> (rgb, sigma) for rendering."""

    def field(points, view_dirs):
        return _field_batch(scene, latents, points, view_dirs, cfg)

    return field


def oracle_sigma(scene: FaceProxyScene, z_exp, points, cfg: RenderConfig = DEFAULT):
    """Density channel alone (no shading); handy for sampler tests."""
    d = sdf(scene, z_exp, points)
    return cfg.sigma_max * expit(-d / cfg.eps_surf)
