from .latents import (
    CAM_HIGH,
    CAM_LOW,
    DEFAULT_ID_DIM,
    EXP_DIM,
    ILL_HIGH,
    ILL_LOW,
    SceneLatents,
    mean_illumination,
    neutral_latents,
    sample_latents,
)
from .proxy import (
    EXPR_CENTERS,
    EXPR_SIGMAS,
    FaceProxyScene,
    identity_to_proxy,
    mean_scene,
    sdf,
)
from .shading import albedo_at, light_direction, shade_blinn_phong
from .tracing import trace_depth, trace_depth_grid
from .render import (
    LabeledSample,
    make_oracle_field,
    oracle_field,
    oracle_sigma,
    render_ground_truth,
    surface_normals,
)
from .dataset import generate_dataset, load_manifest, sample_rng, write_manifest
from .fileio import read_depth, read_png, write_depth, write_png

__all__ = [
    "CAM_HIGH",
    "CAM_LOW",
    "DEFAULT_ID_DIM",
    "EXP_DIM",
    "EXPR_CENTERS",
    "EXPR_SIGMAS",
    "FaceProxyScene",
    "ILL_HIGH",
    "ILL_LOW",
    "LabeledSample",
    "SceneLatents",
    "albedo_at",
    "generate_dataset",
    "identity_to_proxy",
    "light_direction",
    "load_manifest",
    "make_oracle_field",
    "mean_illumination",
    "mean_scene",
    "neutral_latents",
    "oracle_field",
    "oracle_sigma",
    "read_depth",
    "read_png",
    "render_ground_truth",
    "sample_latents",
    "sample_rng",
    "sdf",
    "shade_blinn_phong",
    "surface_normals",
    "trace_depth",
    "trace_depth_grid",
    "write_depth",
    "write_manifest",
    "write_png",
]
