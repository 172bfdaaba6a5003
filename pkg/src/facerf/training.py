"""Supervised training of the generator on the synthetic dataset.

Direct photometric + depth + opacity supervision against the labeled
renders; batches are a pure function of (seed, iteration) so interrupted
runs resume exactly.  Metrics stream to JSON-lines, checkpoints carry the
optimizer state.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensorgrad as tg
from .config import DEFAULT, RenderConfig
from .generator import Generator, GeneratorConfig
from .synthscene import SceneLatents, load_manifest, read_depth, read_png
from .tensorgrad import Adam, Tape, Tensor, backward, load_checkpoint, save_checkpoint
from .volrender import psnr

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    dataset: str = ""
    iterations: int = 500
    batch_size: int = 2
    lr: float = 2e-3
    mapping_lr_mult: float = 0.01
    w_pht: float = 1.0
    w_depth: float = 1.0
    w_opacity: float = 0.1
    w_std_hinge: float = 1.0
    photometric_fg_weight: float = 1.0   # 2.0 doubles foreground pixels in L_pht
    seed: int = 0
    checkpoint_every: int = 0            # 0: only the final checkpoint
    out_dir: str = "train_out"
    val_count: int = 8
    generator: dict = field(default_factory=lambda: GeneratorConfig().to_dict())

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        for w in (self.w_pht, self.w_depth, self.w_opacity, self.w_std_hinge):
            if w < 0:
                raise ValueError("loss weights must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d.pop("version", None)
        return cls(**d)


# ---------------------------------------------------------------------------
# losses (autodiff tensors for predictions, plain arrays for targets)
# ---------------------------------------------------------------------------

def loss_photometric(pred, target, mask=None, fg_weight: float = 2.0):
    """Mean squared error; an optional mask reweights foreground pixels."""
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    err = pred - target
    sq = err * err
    if mask is None:
        return tg.tmean(sq)
    weights = np.where(np.asarray(mask, dtype=bool), fg_weight, 1.0)[..., None]
    weights = np.broadcast_to(weights, target.shape)
    return tg.tsum(sq * weights) / float(weights.sum())


def loss_depth(d_mu, depth_gt, mask):
    """MSE of the predicted depth mean over finite-depth pixels; 0 when empty."""
    depth_gt = np.asarray(depth_gt, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if d_mu.shape != depth_gt.shape or mask.shape != depth_gt.shape:
        raise ValueError("depth map shapes do not match")
    count = int(mask.sum())
    target = np.where(mask, depth_gt, 0.0)
    err = (d_mu - target) * mask.astype(np.float64)
    return tg.tsum(err * err) / max(count, 1)


def loss_opacity(alpha, mask, clamp: float = 1e-6):
    """Binary cross-entropy pushing alpha to 1 on foreground, 0 on background."""
    mask = np.asarray(mask, dtype=np.float64)
    a = tg.clip(alpha, clamp, 1.0 - clamp)
    ll = mask * tg.log(a) + (1.0 - mask) * tg.log(1.0 - a)
    return -tg.tmean(ll)


def depth_std_hinge(d_std, t_near: float, t_far: float):
    """Keeps the predicted depth spread below a quarter of the ray interval."""
    cap = 0.25 * (t_far - t_near)
    over = tg.relu(d_std - cap)
    return tg.tmean(over * over)


# ---------------------------------------------------------------------------
# data plumbing
# ---------------------------------------------------------------------------

def load_training_set(dataset_dir):
    """Manifest plus decoded images, depths, and latents (in memory)."""
    manifest = load_manifest(os.path.join(dataset_dir, "manifest.json"))
    samples = []
    for entry in manifest["samples"]:
        samples.append({
            "image": read_png(os.path.join(dataset_dir, entry["image"])),
            "depth": read_depth(os.path.join(dataset_dir, entry["depth"])),
            "latents": SceneLatents.from_dict(entry),
        })
    return manifest, samples


def batch_indices(seed: int, n: int, batch_size: int, iteration: int) -> list[int]:
    """Batch membership as a pure function of (seed, iteration): a seeded
    shuffle per epoch, consumed sequentially (so resuming is exact)."""
    out = []
    pos = iteration * batch_size
    while len(out) < batch_size:
        epoch, offset = divmod(pos, n)
        order = np.random.default_rng(
            np.random.SeedSequence((seed, epoch))).permutation(n)
        take = min(batch_size - len(out), n - offset)
        out.extend(int(i) for i in order[offset:offset + take])
        pos += take
    return out


# ---------------------------------------------------------------------------
# the loop
# ---------------------------------------------------------------------------

def _save_train_checkpoint(path, gen: Generator, opt: Adam, config: TrainConfig,
                           iteration: int):
    params = dict(gen.params())
    names = gen.param_names()
    for i, n in enumerate(names):
        params[f"adam.m.{n}"] = opt.state.m[i]
        params[f"adam.v.{n}"] = opt.state.v[i]
    # filesystem locations stay out of the checkpoint so identical runs give
    # identical bytes regardless of where they were written
    tc = config.to_dict()
    tc.pop("dataset", None)
    tc.pop("out_dir", None)
    meta = {"kind": "train", "seed": gen.seed, "config": gen.config.to_dict(),
            "train_config": tc, "iteration": iteration,
            "adam_step": opt.state.step}
    save_checkpoint(path, params, meta)


def load_train_checkpoint(path, render_cfg: RenderConfig = DEFAULT):
    arrays, meta = load_checkpoint(path)
    gen = Generator(GeneratorConfig.from_dict(meta["config"]),
                    seed=int(meta.get("seed", 0)), render_cfg=render_cfg)
    gen.load_state({n: arrays[n] for n in gen.param_names()})
    return gen, arrays, meta


def sample_losses(gen: Generator, sample: dict, config: TrainConfig):
    """Forward one labeled sample and assemble its loss terms."""
    image, alpha, d_mu, _d_std = gen.forward_latents(sample["latents"])
    fg = np.isfinite(sample["depth"])
    mask = fg if config.photometric_fg_weight != 1.0 else None
    l_pht = loss_photometric(image, sample["image"], mask,
                             fg_weight=config.photometric_fg_weight)
    l_depth = loss_depth(d_mu, np.where(fg, sample["depth"], 0.0), fg)
    l_op = loss_opacity(alpha, fg)
    l_hinge = depth_std_hinge(_d_std, gen.render_cfg.t_near, gen.render_cfg.t_far)
    total = config.w_pht * l_pht + config.w_depth * l_depth \
        + config.w_opacity * l_op + config.w_std_hinge * l_hinge
    return total, l_pht, l_depth, l_op


def validation_psnr(gen: Generator, samples, count: int) -> float:
    vals = []
    for s in samples[:count]:
        img, _, _, _ = gen.render(s["latents"])
        vals.append(psnr(img, s["image"]))
    return float(np.mean(vals)) if vals else 0.0


def train(config: TrainConfig, resume_from=None):
    """Run the optimization; returns (final checkpoint path, metrics path)."""
    manifest, samples = load_training_set(config.dataset)
    if not samples:
        raise ValueError("dataset is empty")
    os.makedirs(config.out_dir, exist_ok=True)

    gcfg = GeneratorConfig.from_dict(config.generator)
    if len(samples[0]["latents"].z_id) != gcfg.id_dim:
        raise ValueError(
            f"manifest z_id dim {len(samples[0]['latents'].z_id)} does not match "
            f"generator id_dim {gcfg.id_dim}")
    if manifest["width"] != gcfg.width or manifest["height"] != gcfg.height:
        raise ValueError("dataset resolution does not match generator config")

    gen = Generator(gcfg, seed=config.seed)
    opt = Adam(gen.param_list(), lr=config.lr,
               lr_mults=gen.lr_multipliers(config.mapping_lr_mult))
    start_iter = 0
    if resume_from is not None:
        gen2, arrays, meta = load_train_checkpoint(resume_from)
        gen.load_state({n: arrays[n] for n in gen.param_names()})
        for i, n in enumerate(gen.param_names()):
            opt.state.m[i] = arrays[f"adam.m.{n}"].copy()
            opt.state.v[i] = arrays[f"adam.v.{n}"].copy()
        opt.state.step = int(meta["adam_step"])
        start_iter = int(meta["iteration"])
        log.info("resuming from %s at iteration %d", resume_from, start_iter)

    metrics_path = os.path.join(config.out_dir, "metrics.jsonl")
    mode = "a" if start_iter > 0 else "w"
    n = len(samples)
    params = gen.param_list()
    with open(metrics_path, mode, encoding="utf-8") as metrics:
        for it in range(start_iter, config.iterations):
            t0 = time.time()
            batch = batch_indices(config.seed, n, config.batch_size, it)
            grad_sum = [np.zeros_like(p.data) for p in params]
            acc = np.zeros(4)
            for idx in batch:
                with Tape() as tape:
                    total, l_pht, l_depth, l_op = sample_losses(gen, samples[idx], config)
                if not np.isfinite(total.data):
                    _dump_diagnostic(config.out_dir, it, batch, samples[idx])
                    raise FloatingPointError(
                        f"non-finite loss at iteration {it}; batch dumped")
                backward(tape, total, params=params)
                for g, p in zip(grad_sum, params):
                    g += p.grad
                acc += [total.item(), l_pht.item(), l_depth.item(), l_op.item()]
            opt.step([g / len(batch) for g in grad_sum])
            acc /= len(batch)
            record = {
                "iter": it,
                "l_pht": acc[1],
                "l_depth": acc[2],
                "l_op": acc[3],
                "psnr_val": validation_psnr(gen, samples, config.val_count),
                "secs": time.time() - t0,
            }
            metrics.write(json.dumps(record) + "\n")
            if config.checkpoint_every and (it + 1) % config.checkpoint_every == 0:
                _save_train_checkpoint(
                    os.path.join(config.out_dir, f"ckpt_{it + 1:06d}.rfck"),
                    gen, opt, config, it + 1)
            if it % 50 == 0:
                log.info("iter %d: loss %.5f pht %.5f depth %.5f op %.5f",
                         it, acc[0], acc[1], acc[2], acc[3])

    final_path = os.path.join(config.out_dir, "ckpt_final.rfck")
    _save_train_checkpoint(final_path, gen, opt, config, config.iterations)
    return final_path, metrics_path


def _dump_diagnostic(out_dir, iteration, batch, sample):
    path = os.path.join(out_dir, "diagnostic.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({
            "iteration": iteration,
            "batch": list(batch),
            "latents": sample["latents"].to_dict(),
        }, fh, indent=1)
    log.error("non-finite loss; offending batch written to %s", path)
