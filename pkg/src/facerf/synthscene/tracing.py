"""Exact depth oracle: sphere tracing against the proxy SDF."""

from __future__ import annotations

import logging

import numpy as np

from .. import kernels
from ..config import DEFAULT, RenderConfig
from ..geometry import Ray
from .proxy import EXPR_CENTERS, EXPR_SIGMAS, FaceProxyScene

log = logging.getLogger(__name__)


def trace_depth_grid(scene: FaceProxyScene, z_exp, origins, dirs,
                     t_near: float, t_far: float):
    """Trace many rays; returns (depths, hit_mask). Misses get np.inf."""
    origins = np.ascontiguousarray(origins, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    z = np.ascontiguousarray(np.asarray(z_exp, dtype=np.float64))
    t, status = kernels.trace_rays(origins, dirs, float(t_near), float(t_far),
                                   scene.pack(), EXPR_CENTERS, EXPR_SIGMAS,
                                   scene.expr_amps, z)
    overflow = int(np.count_nonzero(status == kernels.OVERFLOW))
    if overflow:
        log.warning("sphere tracing hit the iteration cap on %d rays; "
                    "reporting them as background", overflow)
    return t, status == kernels.HIT


def trace_depth(scene: FaceProxyScene, z_exp, ray: Ray,
                cfg: RenderConfig = DEFAULT) -> float:
    """Camera-space distance of the first surface crossing, or np.inf."""
    del cfg
    t, _ = trace_depth_grid(scene, z_exp, ray.origin[None, :], ray.direction[None, :],
                            ray.t_near, ray.t_far)
    return float(t[0])
