"""Shared scene and rendering constants.

The proxy head lives inside the unit sphere (1.2x with expressions); the
camera orbits it at roughly CAM_RADIUS.  t_near/t_far bracket the displaced
head from any in-range camera with >= 20% of the head radius to spare.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_TILT = np.pi / 6.0  # camera yaw/pitch clamp, +-30 degrees


@dataclass(frozen=True)
class RenderConfig:
    cam_radius: float = 2.7          # orbit radius r0 at zero log-offset
    cam_log_radius_range: float = 0.1
    fov: float = 0.9                 # vertical field of view, radians
    t_near: float = 1.0
    t_far: float = 4.6
    sigma_max: float = 300.0         # density scale of the oracle field
    eps_surf: float = 0.0015         # logistic width of the oracle density wall
    background: tuple = (0.5, 0.5, 0.5)
    std_floor_frac: float = 1e-4     # depth-std floor as a fraction of (t_far - t_near)

    @property
    def std_floor(self) -> float:
        return self.std_floor_frac * (self.t_far - self.t_near)

    @property
    def background_rgb(self) -> np.ndarray:
        return np.asarray(self.background, dtype=np.float64)


DEFAULT = RenderConfig()
