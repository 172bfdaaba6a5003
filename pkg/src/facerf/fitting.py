"""Inverse rendering: recover scene latents for a target image by gradient
descent through the frozen generator, then optionally finetune the weights
at a 200-fold smaller learning rate.

Results use best-iterate bookkeeping (the reported iterate is the one with
minimum loss), so phase 2 can never report a worse fit than phase 1.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensorgrad as tg
from .generator import Generator
from .synthscene.latents import (
    CAM_HIGH,
    CAM_LOW,
    EXP_DIM,
    ILL_HIGH,
    ILL_LOW,
    SceneLatents,
    mean_illumination,
)
from .tensorgrad import Adam, Tape, Tensor, backward

log = logging.getLogger(__name__)


@dataclass
class FitConfig:
    latent_steps: int = 300
    finetune_steps: int = 100
    latent_lr: float = 0.03
    finetune_lr_divisor: float = 200.0
    w_pht: float = 1.0
    w_prior: float = 1e-3      # on |z_ID|^2
    w_feature: float = 1.0     # plugin term weight, if a plugin is given

    def __post_init__(self):
        if self.finetune_lr_divisor <= 0:
            raise ValueError("finetune_lr_divisor must be positive")
        if self.latent_steps < 0 or self.finetune_steps < 0:
            raise ValueError("step counts must be >= 0")

    def to_dict(self):
        return asdict(self)


@dataclass
class FitResult:
    latents: SceneLatents
    image: np.ndarray
    trace: list = field(default_factory=list)   # {"phase", "step", "loss"} dicts
    best_loss: float = np.inf
    finetuned: bool = False


def init_latents(id_dim: int = 64) -> SceneLatents:
    """Zero expression/identity, frontal camera, dataset-mean illumination."""
    return SceneLatents(
        z_id=np.zeros(id_dim),
        z_exp=np.zeros(EXP_DIM),
        z_cam=np.zeros(3),
        z_ill=mean_illumination(),
    )


def pyramid_feature_loss(levels: int = 3):
    """Reference feature-loss plugin: multi-scale image-pyramid L2.

    Stands in for perceptual/identity losses that would need pretrained
    networks; anything with the same (pred, target) -> scalar signature plugs
    into the fitting objective.
    """

    def pool(x):
        h, w = x.shape[0] // 2, x.shape[1] // 2
        if isinstance(x, Tensor):
            return tg.tmean(tg.reshape(x, (h, 2, w, 2, 3)), axis=(1, 3))
        return x.reshape(h, 2, w, 2, 3).mean(axis=(1, 3))

    def feature_loss(pred, target):
        total = 0.0
        p, t = pred, np.asarray(target, dtype=np.float64)
        for _ in range(levels):
            p = pool(p)
            t = pool(t)
            diff = p - t
            total = total + tg.tmean(diff * diff)
        return total / levels

    return feature_loss


def _clamp_latents(z_exp, z_cam, z_ill):
    """Projected-gradient step: keep latents inside the sampling box."""
    z_exp.data = np.clip(z_exp.data, -1.0, 1.0)
    z_cam.data = np.clip(z_cam.data, CAM_LOW, CAM_HIGH)
    z_ill.data = np.clip(z_ill.data, ILL_LOW, ILL_HIGH)


def _objective(gen, tensors, target, plugin, config):
    z_id, z_exp, z_cam, z_ill = tensors
    image, _alpha, _d_mu, _d_std = gen.forward(z_id, z_exp, z_cam, z_ill)
    diff = image - target
    loss = config.w_pht * tg.tmean(diff * diff) \
        + config.w_prior * tg.tsum(z_id * z_id)
    if plugin is not None:
        loss = loss + config.w_feature * plugin(image, target)
    return loss, image


def _descend(gen, tensors, target, plugin, config, steps, phase, opt, trace, best):
    """One trace entry per step; the best (pre-step) iterate is kept."""
    params = opt.params
    for step in range(steps):
        with Tape() as tape:
            loss, image = _objective(gen, tensors, target, plugin, config)
        if not np.isfinite(loss.data):
            raise FloatingPointError(f"non-finite fitting loss at {phase} step {step}")
        val = loss.item()
        trace.append({"phase": phase, "step": step, "loss": val})
        if val < best["loss"]:
            best.update(loss=val, image=image.data.copy(),
                        latents=[t.data.copy() for t in tensors],
                        weights=None if phase == "latent" else gen.state_arrays())
        backward(tape, loss, params=params)
        opt.step()
        _clamp_latents(tensors[1], tensors[2], tensors[3])
    return best


def fit_latents(gen: Generator, target, plugin=None,
                config: FitConfig | None = None,
                init: SceneLatents | None = None) -> FitResult:
    """Phase 1: optimize the latents only; generator weights stay untouched."""
    config = config or FitConfig()
    target = np.asarray(target, dtype=np.float64)
    expect = (gen.config.height, gen.config.width, 3)
    if target.shape != expect:
        raise ValueError(f"target shape {target.shape}, model expects {expect}")
    init = init or init_latents(gen.config.id_dim)
    tensors = [Tensor(v.copy(), requires_grad=True)
               for v in (init.z_id, init.z_exp, init.z_cam, init.z_ill)]
    opt = Adam(tensors, lr=config.latent_lr)
    trace: list = []
    best = {"loss": np.inf, "image": None, "latents": None, "weights": None}
    _descend(gen, tensors, target, plugin, config, config.latent_steps,
             "latent", opt, trace, best)
    if best["latents"] is None:   # latent_steps == 0: report the init itself
        with Tape():
            loss, image = _objective(gen, tensors, target, plugin, config)
        best.update(loss=loss.item(), image=image.data.copy(),
                    latents=[t.data.copy() for t in tensors])
    lat = SceneLatents(*best["latents"])
    return FitResult(latents=lat, image=best["image"], trace=trace,
                     best_loss=best["loss"], finetuned=False)


def finetune_generator(gen: Generator, target, phase1: FitResult, plugin=None,
                       config: FitConfig | None = None):
    """Phase 2: joint descent over latents and a copy of the weights at
    lr / finetune_lr_divisor.  The base generator is never modified.

    Returns (FitResult, finetuned generator).
    """
    config = config or FitConfig()
    target = np.asarray(target, dtype=np.float64)
    tuned = Generator(gen.config, seed=gen.seed, render_cfg=gen.render_cfg)
    tuned.load_state(gen.state_arrays())
    lat = phase1.latents
    tensors = [Tensor(v.copy(), requires_grad=True)
               for v in (lat.z_id, lat.z_exp, lat.z_cam, lat.z_ill)]
    weights = tuned.param_list()
    opt = Adam(tensors + weights, lr=config.latent_lr,
               lr_mults=[1.0] * 4 + [1.0 / config.finetune_lr_divisor] * len(weights))
    trace = list(phase1.trace)
    best = {"loss": phase1.best_loss, "image": phase1.image.copy(),
            "latents": [lat.z_id.copy(), lat.z_exp.copy(),
                        lat.z_cam.copy(), lat.z_ill.copy()],
            "weights": tuned.state_arrays()}
    _descend(tuned, tensors, target, plugin, config, config.finetune_steps,
             "finetune", opt, trace, best)
    tuned.load_state(best["weights"])
    result = FitResult(latents=SceneLatents(*best["latents"]), image=best["image"],
                       trace=trace, best_loss=best["loss"], finetuned=True)
    return result, tuned
