"""Conditioning latents and their dataset sampling ranges."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import MAX_TILT

EXP_DIM = 20
CAM_DIM = 3
ILL_DIM = 8
DEFAULT_ID_DIM = 64

# z_ill layout: (light yaw, light pitch, light RGB x3, ambient RGB x3)
ILL_LOW = np.array([-1.0, -0.3, 0.6, 0.6, 0.6, 0.15, 0.15, 0.15])
ILL_HIGH = np.array([1.0, 1.0, 1.4, 1.4, 1.4, 0.45, 0.45, 0.45])

CAM_LOW = np.array([-MAX_TILT, -MAX_TILT, -0.1])
CAM_HIGH = np.array([MAX_TILT, MAX_TILT, 0.1])


def mean_illumination() -> np.ndarray:
    return 0.5 * (ILL_LOW + ILL_HIGH)


@dataclass
class SceneLatents:
    z_id: np.ndarray
    z_exp: np.ndarray
    z_cam: np.ndarray
    z_ill: np.ndarray

    def __post_init__(self):
        self.z_id = np.asarray(self.z_id, dtype=np.float64)
        self.z_exp = np.asarray(self.z_exp, dtype=np.float64)
        self.z_cam = np.asarray(self.z_cam, dtype=np.float64)
        self.z_ill = np.asarray(self.z_ill, dtype=np.float64)
        self.validate()

    def validate(self):
        if self.z_exp.shape != (EXP_DIM,):
            raise ValueError(f"z_exp must have {EXP_DIM} dims, got {self.z_exp.shape}")
        if self.z_cam.shape != (CAM_DIM,):
            raise ValueError(f"z_cam must have {CAM_DIM} dims, got {self.z_cam.shape}")
        if self.z_ill.shape != (ILL_DIM,):
            raise ValueError(f"z_ill must have {ILL_DIM} dims, got {self.z_ill.shape}")
        if self.z_id.ndim != 1:
            raise ValueError("z_id must be a vector")
        for name, v in (("z_id", self.z_id), ("z_exp", self.z_exp),
                        ("z_cam", self.z_cam), ("z_ill", self.z_ill)):
            if not np.isfinite(v).all():
                raise ValueError(f"{name} contains non-finite values")
        rgb = self.z_ill[2:8]
        if (rgb < 0.0).any() or (rgb > 2.0).any():
            raise ValueError("z_ill RGB entries must lie in [0, 2]")

    def to_dict(self) -> dict:
        return {
            "z_id": self.z_id.tolist(),
            "z_exp": self.z_exp.tolist(),
            "z_cam": self.z_cam.tolist(),
            "z_ill": self.z_ill.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneLatents":
        return cls(np.asarray(d["z_id"]), np.asarray(d["z_exp"]),
                   np.asarray(d["z_cam"]), np.asarray(d["z_ill"]))


def sample_latents(rng: np.random.Generator, id_dim: int = DEFAULT_ID_DIM) -> SceneLatents:
    """Draw one latent tuple from the documented dataset distributions."""
    return SceneLatents(
        z_id=rng.standard_normal(id_dim),
        z_exp=rng.uniform(-1.0, 1.0, EXP_DIM),
        z_cam=rng.uniform(CAM_LOW, CAM_HIGH),
        z_ill=rng.uniform(ILL_LOW, ILL_HIGH),
    )


def neutral_latents(id_dim: int = DEFAULT_ID_DIM) -> SceneLatents:
    """Zero identity and expression, frontal camera, mean illumination."""
    return SceneLatents(
        z_id=np.zeros(id_dim),
        z_exp=np.zeros(EXP_DIM),
        z_cam=np.zeros(CAM_DIM),
        z_ill=mean_illumination(),
    )
