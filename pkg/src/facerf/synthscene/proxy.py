"""Analytic face proxy: an identity-conditioned family of SDF scenes.

A scene is a smooth union of a head and nose ellipsoid with two eye
sockets carved out, displaced by 20 fixed Gaussian-bump expression fields
whose amplitudes are part of the identity.  ``identity_to_proxy`` is an
affine projection of z_ID onto the parameter ranges below, clamped; z_ID=0
lands exactly on the mid-range "mean face".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..kernels.common import N_SCENE_PARAMS
from .latents import EXP_DIM

# (low, high) per packed scene parameter, same order as kernels.common
PARAM_RANGES = np.array([
    (0.60, 0.80), (0.80, 0.98), (0.70, 0.86),     # head radii
    (0.08, 0.14), (0.12, 0.20), (0.10, 0.18),     # nose radii
    (-0.03, 0.03), (-0.18, -0.02), (0.66, 0.80),  # nose offset
    (0.07, 0.12), (0.07, 0.12),                   # socket radii
    (-0.34, -0.22), (0.12, 0.26), (0.58, 0.72),   # left socket center
    (0.22, 0.34), (0.12, 0.26), (0.58, 0.72),     # right socket center
    (0.35, 0.75), (0.35, 0.75), (0.35, 0.75),     # base albedo RGB
    (-0.30, 0.30), (-0.30, 0.30),                 # blotch coefficients
    (0.10, 0.50),                                 # specular k_s
    (8.0, 32.0),                                  # shininess
])
AMP_RANGE = (0.02, 0.07)

_PROJECTION_SEED = 61043  # fixes the z_ID -> parameter projection


def _expression_basis():
    # 5x4 lattice of bump centers on the front of the mean head.
    xs = np.linspace(-0.45, 0.45, 5)
    ys = np.linspace(-0.55, 0.65, 4)
    centers = []
    for y in ys:
        for x in xs:
            inside = max(0.05, 1.0 - (x / 0.70) ** 2 - (y / 0.89) ** 2)
            centers.append((x, y, 0.78 * np.sqrt(inside)))
    sigmas = 0.10 + 0.06 * ((np.arange(EXP_DIM) * 7) % EXP_DIM) / (EXP_DIM - 1.0)
    return np.array(centers), sigmas


EXPR_CENTERS, EXPR_SIGMAS = _expression_basis()


@dataclass
class FaceProxyScene:
    head_radii: np.ndarray
    nose_radii: np.ndarray
    nose_offset: np.ndarray
    socket_radii: np.ndarray      # (2,)
    socket_centers: np.ndarray    # (2, 3)
    albedo_base: np.ndarray       # RGB
    blotch: np.ndarray            # (2,) procedural albedo coefficients
    k_s: float
    shininess: float
    expr_amps: np.ndarray         # (20,) per-scene bump amplitudes

    def pack(self) -> np.ndarray:
        """Flatten primitive and shading parameters for the kernels."""
        out = np.empty(N_SCENE_PARAMS)
        out[0:3] = self.head_radii
        out[3:6] = self.nose_radii
        out[6:9] = self.nose_offset
        out[9:11] = self.socket_radii
        out[11:14] = self.socket_centers[0]
        out[14:17] = self.socket_centers[1]
        out[17:20] = self.albedo_base
        out[20:22] = self.blotch
        out[22] = self.k_s
        out[23] = self.shininess
        return out

    def validate(self):
        if (self.head_radii <= 0).any() or (self.nose_radii <= 0).any() \
                or (self.socket_radii <= 0).any():
            raise ValueError("all radii must be positive")
        if self.head_radii.max() > 1.0:
            raise ValueError("head exceeds the unit bounding sphere")
        if (np.abs(self.nose_offset) + self.nose_radii).max() > 1.0:
            raise ValueError("nose exceeds the unit bounding sphere")
        # Displaced surface must stay inside 1.2x the bounding sphere for all
        # z_exp in [-1,1]^20: on a shell of test points the base SDF has to
        # exceed the worst-case total displacement.
        dirs = _fibonacci_sphere(256)
        shell = 1.2 * dirs
        base = sdf(self, np.zeros(EXP_DIM), shell)
        diff = shell[:, None, :] - EXPR_CENTERS[None, :, :]
        g = np.exp(-0.5 * np.sum(diff * diff, axis=-1) / (EXPR_SIGMAS * EXPR_SIGMAS))
        worst = g @ np.abs(self.expr_amps)
        if not (base > worst).all():
            raise ValueError("expression displacement can escape the 1.2x bound")
        # Undisplaced proxy inside the unit sphere.
        if not (sdf(self, np.zeros(EXP_DIM), dirs) > 0.0).all():
            raise ValueError("proxy surface reaches the unit bounding sphere")


def _fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / n)
    theta = np.pi * (1.0 + 5.0 ** 0.5) * i
    return np.stack([np.cos(theta) * np.sin(phi),
                     np.sin(theta) * np.sin(phi),
                     np.cos(phi)], axis=1)


def _projection(id_dim: int) -> np.ndarray:
    rng = np.random.default_rng(_PROJECTION_SEED)
    n_out = PARAM_RANGES.shape[0] + EXP_DIM
    return rng.standard_normal((n_out, id_dim)) / np.sqrt(id_dim)


_PROJ_CACHE: dict = {}


def identity_to_proxy(z_id) -> FaceProxyScene:
    """Deterministic smooth map from an identity code to a proxy scene."""
    z = np.asarray(z_id, dtype=np.float64)
    if not np.isfinite(z).all():
        raise ValueError("z_id must be finite")
    d = z.shape[0]
    proj = _PROJ_CACHE.get(d)
    if proj is None:
        proj = _projection(d)
        _PROJ_CACHE[d] = proj
    raw = proj @ z
    lows = np.concatenate([PARAM_RANGES[:, 0], np.full(EXP_DIM, AMP_RANGE[0])])
    highs = np.concatenate([PARAM_RANGES[:, 1], np.full(EXP_DIM, AMP_RANGE[1])])
    mid = 0.5 * (lows + highs)
    half = 0.5 * (highs - lows)
    vals = np.clip(mid + half * raw, lows, highs)
    p = vals[:24]
    scene = FaceProxyScene(
        head_radii=p[0:3],
        nose_radii=p[3:6],
        nose_offset=p[6:9],
        socket_radii=p[9:11],
        socket_centers=np.stack([p[11:14], p[14:17]]),
        albedo_base=p[17:20],
        blotch=p[20:22],
        k_s=float(p[22]),
        shininess=float(p[23]),
        expr_amps=vals[24:],
    )
    return scene


def mean_scene() -> FaceProxyScene:
    return identity_to_proxy(np.zeros(1))


def sdf(scene: FaceProxyScene, z_exp, points):
    """Approximate signed distance, negative inside, displaced by z_exp."""
    pts = np.asarray(points, dtype=np.float64)
    squeeze = pts.ndim == 1
    pts = np.ascontiguousarray(pts.reshape(-1, 3))
    z = np.ascontiguousarray(np.asarray(z_exp, dtype=np.float64))
    out = kernels.sdf_points(pts, scene.pack(), EXPR_CENTERS, EXPR_SIGMAS,
                             scene.expr_amps, z)
    return float(out[0]) if squeeze else out
