"""Cameras, per-pixel viewing rays, and sinusoidal positional encoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensorgrad as tg
from .config import DEFAULT, MAX_TILT, RenderConfig


@dataclass
class CameraPose:
    position: np.ndarray      # (3,) world units
    rotation: np.ndarray      # (3, 3) orthonormal camera-to-world, columns (right, up, back)
    fov: float                # vertical field of view, radians
    t_near: float
    t_far: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        if not (0.0 < self.fov < np.pi):
            raise ValueError(f"fov {self.fov} outside (0, pi)")
        if not (0.0 < self.t_near < self.t_far):
            raise ValueError("need 0 < t_near < t_far")
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > 1e-10:
            raise ValueError(f"rotation not orthonormal (deviation {err:.2e})")


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray      # unit norm
    t_near: float
    t_far: float

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        self.direction = np.asarray(self.direction, dtype=np.float64)
        n = np.linalg.norm(self.direction)
        if abs(n - 1.0) > 1e-10:
            raise ValueError(f"ray direction norm {n} != 1")
        if not self.t_near < self.t_far:
            raise ValueError("t_near must be < t_far")


@dataclass
class RayGrid:
    width: int
    height: int
    origins: np.ndarray        # (H*W, 3) row-major
    directions: np.ndarray     # (H*W, 3) unit rows
    t_near: float
    t_far: float

    def ray(self, row: int, col: int) -> Ray:
        i = row * self.width + col
        return Ray(self.origins[i], self.directions[i], self.t_near, self.t_far)


def camera_from_z_cam(z_cam, cfg: RenderConfig = DEFAULT) -> CameraPose:
    """Camera on a sphere around the origin from (yaw, pitch, log-radius offset).

    Yaw and pitch are clamped to +-30 degrees; the pose looks at the origin
    with +y up.
    """
    z = np.asarray(z_cam, dtype=np.float64)
    if z.shape != (3,) or not np.isfinite(z).all():
        raise ValueError("z_cam must be a finite 3-vector")
    yaw = float(np.clip(z[0], -MAX_TILT, MAX_TILT))
    pitch = float(np.clip(z[1], -MAX_TILT, MAX_TILT))
    radius = cfg.cam_radius * float(np.exp(z[2]))
    position = radius * np.array([
        np.sin(yaw) * np.cos(pitch),
        np.sin(pitch),
        np.cos(yaw) * np.cos(pitch),
    ])
    back = position / np.linalg.norm(position)        # unit vector from target to camera
    world_up = np.array([0.0, 1.0, 0.0])
    right = np.cross(world_up, back)
    right /= np.linalg.norm(right)
    up = np.cross(back, right)
    rotation = np.stack([right, up, back], axis=1)
    return CameraPose(position, rotation, cfg.fov, cfg.t_near, cfg.t_far)


def generate_rays(camera: CameraPose, width: int, height: int) -> RayGrid:
    """One ray per pixel center, row-major, directions unit-norm."""
    if width < 1 or height < 1:
        raise ValueError("image dimensions must be >= 1")
    half_h = np.tan(camera.fov / 2.0)
    half_w = half_h * width / height
    # Pixel centers; +x right, +y up in camera space, viewing along -z.
    xs = (np.arange(width) + 0.5) / width * 2.0 - 1.0
    ys = 1.0 - (np.arange(height) + 0.5) / height * 2.0
    xg, yg = np.meshgrid(xs * half_w, ys * half_h)
    dirs_cam = np.stack([xg, yg, -np.ones_like(xg)], axis=-1).reshape(-1, 3)
    dirs = dirs_cam @ camera.rotation.T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.broadcast_to(camera.position, dirs.shape).copy()
    return RayGrid(width, height, origins, dirs, camera.t_near, camera.t_far)


def positional_encode(v, freq_count: int):
    """Sinusoidal features (sin(2^j pi v_i), cos(2^j pi v_i)), per dim then per frequency.

    Works on plain arrays and on autodiff tensors (the fitting path optimizes
    camera and light parameters through this encoding).
    """
    if freq_count < 1:
        raise ValueError("freq_count must be >= 1")
    freqs = (2.0 ** np.arange(freq_count)) * np.pi
    if isinstance(v, tg.Tensor):
        parts = []
        flat = tg.reshape(v, (v.size,))
        for i in range(v.size):
            vi = flat[i]
            for f in freqs:
                parts.append(tg.sin(vi * f))
                parts.append(tg.cos(vi * f))
        return tg.stack(parts, axis=0)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    out = np.empty(2 * freq_count * v.size)
    k = 0
    for vi in v:
        for f in freqs:
            out[k] = np.sin(vi * f)
            out[k + 1] = np.cos(vi * f)
            k += 2
    return out
